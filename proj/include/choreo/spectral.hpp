#pragma once

/// \file spectral.hpp
/// Circulant data of the choreography problem, the circle-restricted action optimum and the
/// regime classifier over the frame angular velocity.
///
/// Winding convention: a rotating-frame circle R*exp(J m t) has kinetic energy
/// pi R^2 (m + omega)^2, so minimizing circles near omega = k carry m = -k.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "choreo/action.hpp"
#include "choreo/loop.hpp"

namespace choreo {

/// xi_bar, mu_bar, c, c_tilde and the eigenvalues delta_l of the weighted cycle Laplacian.
struct CirculantSpectrum {
  int n = 0;
  double alpha = 0.0;
  int variant = 1;
  std::vector<double> xi_bar;  ///< index h-1, h = 1..n-1
  std::vector<double> mu_bar;
  double c = 0.0;
  double c_tilde = 0.0;
  std::vector<double> deltas;  ///< delta_0 .. delta_{n/2}
  std::vector<int> multiplicities;
  double delta_max = 0.0;

  /// delta for any residue l (delta_l = delta_{n-l}).
  double delta(int l) const {
    l = ((l % n) + n) % n;
    return deltas[static_cast<std::size_t>(std::min(l, n - l))];
  }
};

/// c_tilde = pi * sum_h (2 sin(pi q h / n))^-alpha, the potential of a unit circle of winding q.
inline double circle_potential_constant(int n, double alpha, int q = 1) {
  double s = 0.0;
  for (int h = 1; h < n; ++h) s += std::pow(2.0 * std::abs(std::sin(pi * q * h / n)), -alpha);
  return pi * s;
}

inline CirculantSpectrum circulant_spectrum(int n, double alpha, int k = 1) {
  if (n < 2) throw Error("circulant_spectrum: n must be >= 2");
  if (!(alpha > 0.0)) throw Error("circulant_spectrum: alpha must be > 0");
  if (std::gcd(k, n) != 1) throw Error("circulant_spectrum: variant k must be coprime with n");
  CirculantSpectrum s;
  s.n = n;
  s.alpha = alpha;
  s.variant = k;
  const double beta = alpha / 2.0;
  for (int h = 1; h < n; ++h) {
    const double sn = std::sin(pi * k * h / n);
    s.xi_bar.push_back(8.0 * pi * sn * sn);
  }
  for (double xi : s.xi_bar) s.c += std::pow(xi, -beta);
  for (double xi : s.xi_bar) s.mu_bar.push_back(1.0 / (s.c * std::pow(xi, beta + 1.0)));
  s.c_tilde = circle_potential_constant(n, alpha, k);
  for (int l = 0; l <= n / 2; ++l) {
    double d = 0.0;
    for (int h = 1; h < n; ++h) d += s.mu_bar[h - 1] * (1.0 - std::cos(two_pi * h * l / n));
    s.deltas.push_back(2.0 * d);
    s.multiplicities.push_back((l == 0 || 2 * l == n) ? 1 : 2);
  }
  s.delta_max = *std::max_element(s.deltas.begin(), s.deltas.end());
  return s;
}

/// The n x n matrix D built entry by entry from the weights (independent of the closed form).
inline Eigen::MatrixXd dense_operator(const CirculantSpectrum& s) {
  const int n = s.n;
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int h = 1; h < n; ++h) {
      const double m = s.mu_bar[h - 1];
      D(i, i) += 2.0 * m;
      D(i, (i + h) % n) -= m;
      D(i, ((i - h) % n + n) % n) -= m;
    }
  }
  return D;
}

/// Sorted eigenvalues of the dense operator.
inline std::vector<double> dense_spectrum(const CirculantSpectrum& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_operator(s), Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  return {ev.data(), ev.data() + ev.size()};
}

/// Closed-form eigenvalues expanded with multiplicity, sorted.
inline std::vector<double> expanded_spectrum(const CirculantSpectrum& s) {
  std::vector<double> out;
  for (std::size_t l = 0; l < s.deltas.size(); ++l)
    for (int r = 0; r < s.multiplicities[l]; ++r) out.push_back(s.deltas[l]);
  std::sort(out.begin(), out.end());
  return out;
}

/// max |D v - delta_l v| over the cosine and sine eigenvectors of every l.
inline double eigenvector_residual(const CirculantSpectrum& s) {
  const Eigen::MatrixXd D = dense_operator(s);
  double worst = 0.0;
  for (int l = 0; l <= s.n / 2; ++l) {
    Eigen::VectorXd vc(s.n), vs(s.n);
    for (int i = 0; i < s.n; ++i) {
      vc(i) = std::cos(two_pi * i * l / s.n);
      vs(i) = std::sin(two_pi * i * l / s.n);
    }
    worst = std::max(worst, (D * vc - s.deltas[l] * vc).cwiseAbs().maxCoeff());
    worst = std::max(worst, (D * vs - s.deltas[l] * vs).cwiseAbs().maxCoeff());
  }
  return worst;
}

struct AdmissibleLambda {
  int l = 0;
  int r = 0;
  int frequency = 0;  ///< l + r n
  double lambda = 0.0;
  bool tied_with_previous = false;
};

/// lambda = (omega - (l + r n))^2 / delta_l for l = 1..n-1 and r in [r_min, r_max], ascending.
inline std::vector<AdmissibleLambda> admissible_lambdas(const CirculantSpectrum& s, double omega, int r_min, int r_max,
                                                        double tie_tol = 1e-12) {
  std::vector<AdmissibleLambda> out;
  for (int l = 1; l < s.n; ++l) {
    const double d = s.delta(l);
    if (!(d > 0.0)) continue;
    for (int r = r_min; r <= r_max; ++r) {
      const int f = l + r * s.n;
      out.push_back({l, r, f, (omega - f) * (omega - f) / d, false});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.lambda < b.lambda; });
  for (std::size_t i = 1; i < out.size(); ++i)
    out[i].tied_with_previous = std::abs(out[i].lambda - out[i - 1].lambda) <= tie_tol * std::max(1.0, out[i].lambda);
  return out;
}

/// Largest omega with (omega-1)^2 <= (omega-k)^2/k^2 for every integer k >= 2.
inline double omega_star() {
  // for 1 < omega < k the condition reads omega <= 2k/(k+1), increasing in k
  double best = std::numeric_limits<double>::infinity();
  for (int k = 2; k <= 64; ++k) best = std::min(best, 2.0 * k / (k + 1.0));
  return best;
}

struct Min2Result {
  bool holds = false;
  double epsilon = 0.0;
  double delta_max = 0.0;
};

/// Largest eps <= 1/2 with 2 pi x^2 delta_max <= (1 - x)^2 for all 0 < x < eps.
inline double min2_margin(double delta_max) { return std::min(0.5, 1.0 / (1.0 + std::sqrt(two_pi * delta_max))); }

inline Min2Result min2_check(int n, double alpha, int k) {
  if (k < 2 || k > n - 1) throw Error("min2_check: k must lie in [2, n-1]");
  if (std::gcd(k, n) != 1) throw Error("min2_check: k must be coprime with n");
  const auto s = circulant_spectrum(n, alpha, k);
  const double eps = min2_margin(s.delta_max);
  return {eps > 0.0, eps, s.delta_max};
}

// ---------------------------------------------------------------------------------------------
// Circle-restricted optimum

struct CircleCandidate {
  int winding = 0;
  double radius = 0.0;
  double action = 0.0;
};

struct PaperConstants {
  double c_tilde = 0.0;
  double c_omega = 0.0;        ///< 2 pi (omega - k)^2 as printed; 2 pi n at omega = 0
  double radius_printed = 0.0;
};

struct CirclePrediction {
  std::vector<CircleCandidate> best;  ///< ties share the minimal action
  PaperConstants paper_constants;
};

/// Minimal action of the circle R exp(J m t) over R.
inline CircleCandidate circle_optimum(int n, double alpha, double omega, int m) {
  const double P = circle_potential_constant(n, alpha, m);
  const double a = pi * (m + omega) * (m + omega);
  const double R = std::pow(alpha * P / (2.0 * a), 1.0 / (alpha + 2.0));
  return {m, R, a * R * R + P * std::pow(R, -alpha)};
}

/// Best admissible circle, or nullopt when some admissible winding has m + omega = 0.
inline std::optional<CirclePrediction> predicted_circle(int n, double alpha, double omega) {
  const int centre = static_cast<int>(std::lround(-omega));
  std::vector<CircleCandidate> cands;
  for (int m = centre - n - 2; m <= centre + n + 2; ++m) {
    if (m == 0 || std::gcd(std::abs(m), n) != 1) continue;
    if (m + omega == 0.0) return std::nullopt;
    cands.push_back(circle_optimum(n, alpha, omega, m));
  }
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : cands) best = std::min(best, c.action);
  CirclePrediction out;
  for (const auto& c : cands)
    if (c.action <= best * (1.0 + 1e-12)) out.best.push_back(c);

  auto& pc = out.paper_constants;
  pc.c_tilde = circle_potential_constant(n, alpha);
  if (omega == 0.0) {
    pc.c_omega = two_pi * n;
    pc.radius_printed = std::pow(alpha * pc.c_tilde / (4.0 * pi * n), 1.0 / (alpha + 2.0));
  } else {
    const double k = std::max(1.0, std::round(omega));
    pc.c_omega = two_pi * (omega - k) * (omega - k);
    pc.radius_printed = pc.c_omega > 0.0 ? std::pow(alpha * pc.c_tilde / (2.0 * n * pc.c_omega), 1.0 / (alpha + 2.0))
                                         : std::numeric_limits<double>::infinity();
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Cluster ansatz for omega near a non-coprime integer

namespace detail {

/// Plain Nelder-Mead on R^2; returns the best vertex.
inline std::array<double, 3> nelder_mead2(const std::function<double(double, double)>& f, double x0, double y0,
                                          double step, int iters) {
  std::array<std::array<double, 3>, 3> v{{{x0, y0, 0}, {x0 + step, y0, 0}, {x0, y0 + step, 0}}};
  for (auto& p : v) p[2] = f(p[0], p[1]);
  for (int it = 0; it < iters; ++it) {
    std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a[2] < b[2]; });
    if (std::abs(v[2][2] - v[0][2]) <= 1e-13 * std::max(1.0, std::abs(v[0][2]))) break;
    const double cx = 0.5 * (v[0][0] + v[1][0]), cy = 0.5 * (v[0][1] + v[1][1]);
    auto at = [&](double t) {
      std::array<double, 3> p{cx + t * (v[2][0] - cx), cy + t * (v[2][1] - cy), 0};
      p[2] = f(p[0], p[1]);
      return p;
    };
    const auto r = at(-1.0);
    if (r[2] < v[0][2]) {
      const auto e = at(-2.0);
      v[2] = e[2] < r[2] ? e : r;
    } else if (r[2] < v[1][2]) {
      v[2] = r;
    } else {
      const auto c = r[2] < v[2][2] ? at(-0.5) : at(0.5);
      if (c[2] < std::min(r[2], v[2][2])) {
        v[2] = c;
      } else {
        for (int i = 1; i < 3; ++i) {
          v[i][0] = v[0][0] + 0.5 * (v[i][0] - v[0][0]);
          v[i][1] = v[0][1] + 0.5 * (v[i][1] - v[0][1]);
          v[i][2] = f(v[i][0], v[i][1]);
        }
      }
    }
  }
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a[2] < b[2]; });
  return v[0];
}

}  // namespace detail

/// y = C exp(-J w t) + r exp(J (s - w) t) with w the winding and s = +-1: j rigidly rotating
/// clusters, each a small k~-body circle choreography.
inline FourierLoop cluster_ansatz_loop(int dim, int cutoff, int winding, double centre_radius, double inner_radius,
                                       int inner_sign) {
  FourierLoop y(dim, cutoff);
  auto add = [&](int m, double R) {
    const int k = std::abs(m);
    if (k == 0) {
      y.mean(0) += R;
      return;
    }
    y.cos(k, 0) += R;
    y.sin(k, 1) += m > 0 ? R : -R;
  };
  add(-winding, centre_radius);
  add(inner_sign - winding, inner_radius);
  return y;
}

struct ClusterAnsatzResult {
  double action = std::numeric_limits<double>::infinity();
  double centre_radius = 0.0;
  double inner_radius = 0.0;
  int inner_sign = 1;
};

/// Best cluster-ansatz action at (n, alpha, omega) for total winding w (w a multiple of gcd).
inline ClusterAnsatzResult cluster_ansatz(int n, double alpha, double omega, int winding) {
  const int g = std::gcd(winding, n);
  const int cutoff = winding + 1;
  const SystemParams p{n, 2, alpha, omega};
  ChoreographyAction f(p, cutoff);
  const double inner0 = circle_optimum(g, alpha, 0.0, 1).radius;
  ClusterAnsatzResult best;
  for (int sign : {1, -1}) {
    auto obj = [&](double lc, double lr) {
      try {
        return f.value(cluster_ansatz_loop(2, cutoff, winding, std::exp(lc), std::exp(lr), sign)).total;
      } catch (const CollisionError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    const auto v = detail::nelder_mead2(obj, std::log(4.0 * inner0), std::log(inner0), 0.3, 400);
    if (v[2] < best.action) best = {v[2], std::exp(v[0]), std::exp(v[1]), sign};
  }
  return best;
}

// ---------------------------------------------------------------------------------------------
// Classifier

enum class Regime {
  inertial_circle,
  rotating_circle,
  no_minimum_coprime_int,
  continuum_omega_n,
  inf_not_attained_cluster,
  nonrigid_winding_k,
  near_n_translated_circle,
  undetermined
};

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::inertial_circle: return "INERTIAL_CIRCLE";
    case Regime::rotating_circle: return "ROTATING_CIRCLE";
    case Regime::no_minimum_coprime_int: return "NO_MINIMUM_COPRIME_INT";
    case Regime::continuum_omega_n: return "CONTINUUM_OMEGA_N";
    case Regime::inf_not_attained_cluster: return "INF_NOT_ATTAINED_CLUSTER";
    case Regime::nonrigid_winding_k: return "NONRIGID_WINDING_K";
    case Regime::near_n_translated_circle: return "NEAR_N_TRANSLATED_CIRCLE";
    case Regime::undetermined: return "UNDETERMINED";
  }
  return "?";
}

inline bool predicts_circle(Regime r) {
  return r == Regime::inertial_circle || r == Regime::rotating_circle || r == Regime::near_n_translated_circle;
}

/// True when the regime says minimizing sequences escape (no minimizer exists).
inline bool predicts_escape(Regime r) {
  return r == Regime::no_minimum_coprime_int || r == Regime::inf_not_attained_cluster;
}

struct RegimeReport {
  int n = 0;
  double alpha = 0.0;
  double omega = 0.0;
  Regime regime = Regime::undetermined;
  std::optional<int> predicted_winding;
  std::vector<int> tied_windings;  ///< all windings sharing the minimal circle action
  std::optional<double> predicted_radius;
  std::optional<double> predicted_action;
  std::optional<double> predicted_period;
  std::optional<std::pair<int, int>> cluster_shape;  ///< (j clusters, k~ bodies each)
  double omega_bar = 0.0;
  int l = 0;  ///< omega = omega_bar + l n
  std::vector<std::string> evidence;
  std::optional<CirclePrediction> hypothesis;  ///< circle prediction attached when undetermined
  std::optional<PaperConstants> paper_constants;
};

namespace detail {

inline void attach_circle(RegimeReport& rep, const CirclePrediction& pred, int expected_winding) {
  const CircleCandidate* pick = &pred.best.front();
  for (const auto& c : pred.best)
    if (c.winding == expected_winding) pick = &c;
  rep.predicted_winding = pick->winding;
  rep.predicted_radius = pick->radius;
  rep.predicted_action = pick->action;
  rep.predicted_period = two_pi / std::abs(pick->winding);
  for (const auto& c : pred.best) rep.tied_windings.push_back(c.winding);
  rep.paper_constants = pred.paper_constants;
}

inline std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace detail

inline RegimeReport classify(int n, double alpha, double omega) {
  if (n < 2) throw Error("classify: n must be >= 2");
  if (!(alpha > 0.0)) throw Error("classify: alpha must be > 0");
  if (!(omega >= 0.0) || !std::isfinite(omega)) throw Error("classify: omega must be >= 0");
  RegimeReport rep;
  rep.n = n;
  rep.alpha = alpha;
  rep.omega = omega;
  rep.l = static_cast<int>(std::floor(omega / n));
  rep.omega_bar = omega - rep.l * n;
  const double wb = rep.omega_bar;
  const int shift = rep.l * n;
  if (rep.l > 0) rep.evidence.push_back("reduction: omega = " + detail::fmt(wb) + " + " + std::to_string(rep.l) + "*n");

  const auto pred = predicted_circle(n, alpha, omega);
  auto set_circle = [&](Regime r, int winding) {
    rep.regime = r;
    if (pred) detail::attach_circle(rep, *pred, winding);
  };
  auto undetermined = [&](const std::string& why) {
    rep.regime = Regime::undetermined;
    rep.evidence.push_back(why);
    rep.hypothesis = pred;
    if (pred) rep.paper_constants = pred->paper_constants;
  };

  if (omega == 0.0) {
    rep.evidence.push_back("inertial frame: Rayleigh bound with equality on winding-1 circles");
    set_circle(Regime::inertial_circle, 1);
    return rep;
  }
  if (wb == 0.0) {
    rep.regime = Regime::continuum_omega_n;
    rep.evidence.push_back("omega_bar = 0: inertial circles plus any translation, counter-rotated at rate n");
    if (pred) rep.paper_constants = pred->paper_constants;
    return rep;
  }
  if (wb == std::floor(wb)) {
    const int k = static_cast<int>(wb);
    const int g = std::gcd(k, n);
    if (g == 1) {
      rep.regime = Regime::no_minimum_coprime_int;
      rep.evidence.push_back("omega_bar = " + std::to_string(k) + " coprime with n: R exp(-J k t) has zero kinetic energy");
    } else {
      rep.regime = Regime::inf_not_attained_cluster;
      rep.cluster_shape = std::make_pair(n / g, g);
      rep.evidence.push_back("omega_bar = " + std::to_string(k) + ", gcd = " + std::to_string(g) +
                             ": infimum is j times the k~-body minimum, not attained");
    }
    return rep;
  }

  const double ws = omega_star();
  if (wb < ws) {
    rep.evidence.push_back("omega_bar = " + detail::fmt(wb) + " < omega* = " + detail::fmt(ws) + ": l = 1 branch minimal");
    set_circle(Regime::rotating_circle, -(1 + shift));
    return rep;
  }

  const auto base = circulant_spectrum(n, alpha);
  const double eps = min2_margin(base.delta_max);
  const double frac = wb - std::floor(wb);

  if (frac == 0.5) {
    const int k0 = static_cast<int>(std::floor(wb)), k1 = k0 + 1;
    auto circle_ok = [&](int k) {
      if (k == n) return true;  // reflected low-omega branch
      return std::gcd(k, n) == 1 && 2.0 * pi * 0.25 * base.delta_max <= 0.25 * (1.0 + 1e-12);
    };
    if (circle_ok(k0) && circle_ok(k1) && pred && pred->best.size() >= 2) {
      rep.evidence.push_back("half-integer omega_bar: min2 holds at distance 1/2 from " + std::to_string(k0) + " and " +
                             std::to_string(k1) + "; circles tie");
      set_circle(Regime::rotating_circle, -(k0 + shift));
      return rep;
    }
    undetermined("half-integer omega_bar without a certified circle on both sides");
    return rep;
  }

  const int k = static_cast<int>(std::lround(wb));
  const double dist = std::abs(wb - k);
  if (k == n) {
    rep.evidence.push_back("omega_bar within 1/2 of n: conjugation maps omega_bar to n - omega_bar = " +
                           detail::fmt(n - wb) + " < omega*; translation pinned off resonance");
    set_circle(Regime::near_n_translated_circle, -(n - 1 + shift));
    return rep;
  }
  const int g = std::gcd(k, n);
  if (g == 1) {
    rep.evidence.push_back("min2 margin eps = " + detail::fmt(eps) + " (delta_max = " + detail::fmt(base.delta_max) +
                           "), |omega_bar - " + std::to_string(k) + "| = " + detail::fmt(dist));
    if (dist < eps) {
      set_circle(Regime::rotating_circle, -(k + shift));
      return rep;
    }
    undetermined("outside the min2 margin");
    return rep;
  }

  // non-coprime nearest integer: certify a non-circular minimizer by beating every circle
  const int w = k + shift;
  const auto ans = cluster_ansatz(n, alpha, omega, w);
  const double circle_best = pred ? pred->best.front().action : std::numeric_limits<double>::infinity();
  rep.evidence.push_back("cluster ansatz action " + detail::fmt(ans.action) + " vs best circle " + detail::fmt(circle_best));
  if (ans.action < circle_best) {
    rep.regime = Regime::nonrigid_winding_k;
    rep.predicted_winding = -w;
    rep.predicted_period = two_pi;
    rep.cluster_shape = std::make_pair(n / g, g);
    if (pred) rep.paper_constants = pred->paper_constants;
    return rep;
  }
  undetermined("cluster ansatz does not beat the best circle");
  return rep;
}

}  // namespace choreo
