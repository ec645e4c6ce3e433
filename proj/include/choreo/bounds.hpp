#pragma once

/// \file bounds.hpp
/// Executable versions of the lower bounds on the action: Poincare, Jensen, the trigonometric
/// inequality, the constrained power-sum minimum, the Rayleigh quotient and the chain
/// A >= A_tilde >= A_bar.

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "choreo/action.hpp"
#include "choreo/loop.hpp"
#include "choreo/spectral.hpp"

namespace choreo {

/// int |q'|^2 / int |q|^2 for a zero-mean loop; equals 1 exactly on first-harmonic loops.
inline double poincare_ratio(const FourierLoop& q) {
  const double l2 = l2_norm_squared(q);
  if (!(l2 > 0.0)) throw Error("poincare_ratio: zero loop");
  double mean2 = 0.0;
  for (int i = 0; i < q.dim(); ++i) mean2 += q.mean(i) * q.mean(i);
  if (two_pi * mean2 > 1e-24 * l2) throw Error("poincare_ratio: loop must have zero mean");
  return kinetic_integral(q) / l2;
}

/// True when only the first harmonic (and no mean) is present.
inline bool first_harmonic_only(const FourierLoop& q, double tol = 0.0) {
  for (int i = 0; i < q.dim(); ++i)
    if (std::abs(q.mean(i)) > tol) return false;
  for (int k = 2; k <= q.cutoff(); ++k)
    for (int i = 0; i < q.dim(); ++i)
      if (std::abs(q.cos(k, i)) > tol || std::abs(q.sin(k, i)) > tol) return false;
  return true;
}

struct JensenGap {
  double lhs = 0.0;  ///< (1/2pi) int |x - x_h|^-alpha
  double rhs = 0.0;  ///< ((1/2pi) int |x - x_h|^2)^(-alpha/2)
  double gap = 0.0;
};

inline JensenGap jensen_gap(const FourierLoop& x, const SystemParams& params, int h, int grid = 0) {
  if (h < 1 || h > params.n - 1) throw Error("jensen_gap: h must lie in [1, n-1]");
  if (grid == 0) grid = default_grid_size(x.cutoff(), params.n);
  if (grid % params.n != 0) throw Error("jensen_gap: grid must be a multiple of n");
  const SampledLoop s = sample(x, grid);
  const int step = grid / params.n;
  double mean_inv = 0.0, mean_sq = 0.0;
  for (int j = 0; j < grid; ++j) {
    const auto a = s.at(j);
    const auto b = s.at((j + h * step) % grid);
    double r2 = 0.0;
    for (int i = 0; i < s.dim; ++i) r2 += (a[i] - b[i]) * (a[i] - b[i]);
    if (!(r2 >= collision_guard * collision_guard)) throw CollisionError(two_pi * j / grid, h, std::sqrt(r2));
    mean_inv += std::pow(r2, -0.5 * params.alpha);
    mean_sq += r2;
  }
  JensenGap out;
  out.lhs = mean_inv / grid;
  out.rhs = std::pow(mean_sq / grid, -0.5 * params.alpha);
  out.gap = out.lhs - out.rhs;
  return out;
}

struct TrigCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
};

/// 1 - cos(k x) against k^2 (1 - cos x).
inline TrigCheck trig_check(int k, double x) {
  if (k < 2) throw Error("trig_check: k must be >= 2");
  if (!(x > 0.0 && x < two_pi)) throw Error("trig_check: x must lie in (0, 2 pi)");
  TrigCheck t;
  t.lhs = 1.0 - std::cos(k * x);
  t.rhs = k * k * (1.0 - std::cos(x));
  t.margin = t.rhs - t.lhs;
  return t;
}

struct PowerMinResult {
  std::vector<double> s;      ///< minimizer on sum mu_h s_h = 1
  double value = 0.0;         ///< sum s_h^-beta at the minimizer (also the minimum of the homogeneous ratio)
  double stationarity = 0.0;  ///< max_h |mu_h s_h^{beta+1} sum_j s_j^-beta - 1|
  int iterations = 0;
};

/// Ratio (sum s^-beta)(sum mu s)^beta, invariant under scaling of s.
inline double power_ratio(const std::vector<double>& mu, const std::vector<double>& s, double beta) {
  double a = 0.0, b = 0.0;
  for (std::size_t h = 0; h < mu.size(); ++h) {
    a += std::pow(s[h], -beta);
    b += mu[h] * s[h];
  }
  return a * std::pow(b, beta);
}

/// Minimize sum_h s_h^-beta subject to sum_h mu_h s_h = 1 by damped Newton on the reduced
/// objective in s_1..s_{K-1} (s_K eliminated through the constraint).
inline PowerMinResult constrained_power_min(const std::vector<double>& mu, double beta, double tol = 1e-12,
                                            int max_iter = 200) {
  const int K = static_cast<int>(mu.size());
  if (K < 1) throw Error("constrained_power_min: need at least one weight");
  if (!(beta > 0.0)) throw Error("constrained_power_min: beta must be > 0");
  for (double m : mu)
    if (!(m > 0.0)) throw Error("constrained_power_min: weights must be positive");

  PowerMinResult out;
  out.s.assign(static_cast<std::size_t>(K), 0.0);
  if (K == 1) {
    out.s[0] = 1.0 / mu[0];
  } else {
    const int N = K - 1;
    const double muK = mu[K - 1];
    Eigen::VectorXd s(N), m(N);
    for (int h = 0; h < N; ++h) {
      s(h) = 1.0 / (K * mu[h]);
      m(h) = mu[h];
    }
    auto slack = [&](const Eigen::VectorXd& v) { return 1.0 - m.dot(v); };
    auto feasible = [&](const Eigen::VectorXd& v) { return (v.array() > 0.0).all() && slack(v) > 0.0; };
    auto objective = [&](const Eigen::VectorXd& v) {
      return v.array().pow(-beta).sum() + std::pow(muK, beta) * std::pow(slack(v), -beta);
    };
    for (int it = 0; it < max_iter; ++it) {
      out.iterations = it + 1;
      const double r = slack(s);
      const double tail = beta * std::pow(muK, beta) * std::pow(r, -beta - 1.0);
      Eigen::VectorXd g = -beta * s.array().pow(-beta - 1.0).matrix() + tail * m;
      Eigen::MatrixXd H = (beta * (beta + 1.0) * s.array().pow(-beta - 2.0)).matrix().asDiagonal();
      H += (beta + 1.0) * tail / r * m * m.transpose();
      const double scale = (beta * s.array().pow(-beta - 1.0)).abs().maxCoeff();
      if (g.cwiseAbs().maxCoeff() <= tol * scale) break;
      const Eigen::VectorXd dir = -H.ldlt().solve(g);
      double t = 1.0;
      const double f0 = objective(s);
      const double floor = 16.0 * std::numeric_limits<double>::epsilon() * std::abs(f0);  // rounding in f near the optimum
      Eigen::VectorXd trial = s + t * dir;
      while ((!feasible(trial) || objective(trial) > f0 + 1e-4 * t * g.dot(dir) + floor) && t > 1e-16) {
        t *= 0.5;
        trial = s + t * dir;
      }
      if (t <= 1e-16) break;
      s = trial;
    }
    for (int h = 0; h < N; ++h) out.s[h] = s(h);
    out.s[K - 1] = slack(s) / muK;
  }
  double v = 0.0;
  for (double sh : out.s) v += std::pow(sh, -beta);
  out.value = v;
  for (int h = 0; h < K; ++h)
    out.stationarity = std::max(out.stationarity, std::abs(mu[h] * std::pow(out.s[h], beta + 1.0) * v - 1.0));
  return out;
}

/// xi_h = int |x(t) - x(t + h tau)|^2, h = 1..n-1.
inline std::vector<double> shift_distances(const FourierLoop& x, int n) {
  std::vector<double> xi;
  for (int h = 1; h < n; ++h) xi.push_back(shift_distance_squared(x, two_pi * h / n));
  return xi;
}

/// sum_h mu_bar_h xi_h.
inline double weighted_distance(const FourierLoop& x, const CirculantSpectrum& s) {
  const auto xi = shift_distances(x, s.n);
  double y = 0.0;
  for (std::size_t h = 0; h < xi.size(); ++h) y += s.mu_bar[h] * xi[h];
  return y;
}

/// (1/2) int |x'|^2 / (n sum_h mu_bar_h xi_h); pi/n on winding-1 circles.
inline double rayleigh_quotient(const FourierLoop& x, const SystemParams& params) {
  const auto s = circulant_spectrum(params.n, params.alpha);
  const double y = weighted_distance(x, s);
  if (!(y > 0.0)) throw Error("rayleigh_quotient: loop has no relative motion");
  return 0.5 * kinetic_integral(x) / (params.n * y);
}

struct BoundChainReport {
  double A = 0.0;
  double A_tilde = 0.0;
  double A_bar_oracle = 0.0;
  double A_bar_paper = 0.0;  ///< kinetic coefficient 2 pi n as printed
  std::vector<double> xi;
  double y_value = 0.0;
  double slack_tilde = 0.0;  ///< A - A_tilde
  double slack_bar = 0.0;    ///< A_tilde - A_bar_oracle
};

/// The inertial chain at x; params.omega is ignored.
inline BoundChainReport bound_chain(const FourierLoop& x, SystemParams params, int grid = 0) {
  params.omega = 0.0;
  const auto s = circulant_spectrum(params.n, params.alpha);
  BoundChainReport r;
  const auto a = choreography_action(x, params, grid);
  r.A = a.total;
  r.xi = shift_distances(x, params.n);
  for (std::size_t h = 0; h < r.xi.size(); ++h) r.y_value += s.mu_bar[h] * r.xi[h];
  const double pot = s.c_tilde * std::pow(r.y_value, -0.5 * params.alpha);
  r.A_tilde = a.kinetic + pot;
  r.A_bar_oracle = pi * r.y_value + pot;
  r.A_bar_paper = two_pi * params.n * r.y_value + pot;
  r.slack_tilde = r.A - r.A_tilde;
  r.slack_bar = r.A_tilde - r.A_bar_oracle;
  return r;
}

}  // namespace choreo
