#pragma once

/// \file action.hpp
/// Discretized action functionals on Fourier loops and their exact coefficient gradients.
///
/// Conventions: J is the counterclockwise quarter turn acting on coordinates (0, 1). A
/// rotating-frame loop R*exp(J m t) has kinetic term pi R^2 (m + omega)^2. The potential
/// integrals use the uniform trapezoid rule on M points, M a multiple of n.

#include <cmath>
#include <concepts>
#include <vector>

#include "choreo/loop.hpp"

namespace choreo {

inline constexpr double collision_guard = 1e-8;

struct ActionValue {
  double kinetic = 0.0;
  double potential = 0.0;
  double total = 0.0;
  int grid_size = 0;
};

enum class Frame { inertial, rotating };

/// Anything the optimizer can descend on.
template <class F>
concept ActionFunctional = requires(const F& f, const FourierLoop& x, FourierLoop& g) {
  { f.value(x) } -> std::convertible_to<ActionValue>;
  { f.value_and_gradient(x, g) } -> std::convertible_to<ActionValue>;
  { f.newton_residual(x) } -> std::convertible_to<double>;
  { f.cutoff() } -> std::convertible_to<int>;
  { f.dim() } -> std::convertible_to<int>;
};

namespace detail {

/// Kinetic term 1/2 int |y' + omega J P y|^2 (+ 1/2 int |y'_perp|^2) and optionally its gradient.
inline double rotating_kinetic(const FourierLoop& y, double omega, FourierLoop* grad) {
  const int d = y.dim();
  double kin = 0.0;
  if (omega != 0.0) {
    const double m2 = y.mean(0) * y.mean(0) + y.mean(1) * y.mean(1);
    kin += pi * omega * omega * m2;
    if (grad) {
      grad->mean(0) += two_pi * omega * omega * y.mean(0);
      grad->mean(1) += two_pi * omega * omega * y.mean(1);
    }
  }
  for (int k = 1; k <= y.cutoff(); ++k) {
    const double a1 = y.cos(k, 0), b1 = y.sin(k, 0), a2 = y.cos(k, 1), b2 = y.sin(k, 1);
    const double r1 = k * b1 - omega * a2;
    const double r2 = k * a1 + omega * b2;
    const double r3 = omega * a1 + k * b2;
    const double r4 = k * a2 - omega * b1;
    kin += 0.5 * pi * (r1 * r1 + r2 * r2 + r3 * r3 + r4 * r4);
    if (grad) {
      grad->cos(k, 0) += pi * (k * r2 + omega * r3);
      grad->sin(k, 0) += pi * (k * r1 - omega * r4);
      grad->cos(k, 1) += pi * (-omega * r1 + k * r4);
      grad->sin(k, 1) += pi * (omega * r2 + k * r3);
    }
    for (int i = 2; i < d; ++i) {
      const double a = y.cos(k, i), b = y.sin(k, i);
      kin += 0.5 * pi * k * k * (a * a + b * b);
      if (grad) {
        grad->cos(k, i) += pi * k * k * a;
        grad->sin(k, i) += pi * k * k * b;
      }
    }
  }
  return kin;
}

/// Potential 1/2 sum_h int |x - x_h|^-alpha on the grid; fills the L^2 force density
/// G_j = sum_h -alpha (x_j - x_{j+hs}) / r^{alpha+2} (without the quadrature weight) if asked.
inline double pair_potential(const std::vector<double>& s, int grid, int d, int n, double alpha,
                             std::vector<double>* force) {
  const int step = grid / n;
  const double w = two_pi / grid;
  double pot = 0.0;
  if (force) force->assign(s.size(), 0.0);
  std::vector<double> diff(static_cast<std::size_t>(d));
  for (int j = 0; j < grid; ++j) {
    const double* xj = s.data() + static_cast<std::size_t>(j * d);
    for (int h = 1; h < n; ++h) {
      const double* xh = s.data() + static_cast<std::size_t>(((j + h * step) % grid) * d);
      double r2 = 0.0;
      for (int i = 0; i < d; ++i) {
        diff[i] = xj[i] - xh[i];
        r2 += diff[i] * diff[i];
      }
      if (!(r2 >= collision_guard * collision_guard))
        throw CollisionError(two_pi * j / grid, h, std::sqrt(r2));
      const double inv = std::pow(r2, -0.5 * alpha);
      pot += inv;
      if (force) {
        const double c = -alpha * inv / r2;
        double* fj = force->data() + static_cast<std::size_t>(j * d);
        for (int i = 0; i < d; ++i) fj[i] += c * diff[i];
      }
    }
  }
  return 0.5 * w * pot;
}

inline double grid_l2(const std::vector<double>& v, int grid) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(two_pi / grid * s);
}

}  // namespace detail

/// The choreography action 1/2 int |y' + omega J y|^2 + 1/2 sum_h int |y - y_h|^-alpha.
/// omega = 0 gives the inertial functional.
class ChoreographyAction {
 public:
  ChoreographyAction(const SystemParams& params, int cutoff, int grid = 0)
      : params_(params), basis_(cutoff, grid == 0 ? default_grid_size(cutoff, params.n) : grid) {
    params_.validate();
    if (basis_.grid_size() % params_.n != 0) throw Error("ChoreographyAction: grid must be a multiple of n");
    if (basis_.grid_size() < 4 * cutoff) throw Error("ChoreographyAction: grid must be at least 4K");
  }

  const SystemParams& params() const noexcept { return params_; }
  int cutoff() const noexcept { return basis_.cutoff(); }
  int dim() const noexcept { return params_.d; }
  int grid_size() const noexcept { return basis_.grid_size(); }

  ActionValue value(const FourierLoop& x) const { return evaluate(x, nullptr); }

  /// Value and exact gradient of the discretized action; `grad` is overwritten.
  ActionValue value_and_gradient(const FourierLoop& x, FourierLoop& grad) const {
    grad = FourierLoop(x.dim(), x.cutoff());
    return evaluate(x, &grad);
  }

  /// L^2 grid norm of y'' + 2 omega J P y' - omega^2 P y + alpha sum_h (y - y_h)/|y - y_h|^{alpha+2}.
  double newton_residual(const FourierLoop& x) const {
    check(x);
    const int m = grid_size(), d = x.dim();
    const auto s = synth(x);
    const FourierLoop v = derivative(x);
    const auto vs = synth(v);
    const auto as = synth(derivative(v));
    std::vector<double> force;
    detail::pair_potential(s, m, d, params_.n, params_.alpha, &force);
    const double w = params_.omega;
    std::vector<double> res(s.size());
    for (int j = 0; j < m; ++j) {
      const std::size_t o = static_cast<std::size_t>(j * d);
      for (int i = 0; i < d; ++i) res[o + i] = as[o + i] - force[o + i];
      res[o + 0] += -2.0 * w * vs[o + 1] - w * w * s[o + 0];
      res[o + 1] += 2.0 * w * vs[o + 0] - w * w * s[o + 1];
    }
    return detail::grid_l2(res, m);
  }

 private:
  void check(const FourierLoop& x) const {
    if (x.dim() != params_.d) throw DimensionError("ChoreographyAction: loop dimension differs from params.d");
    if (x.cutoff() != cutoff()) throw DimensionError("ChoreographyAction: cutoff mismatch");
  }

  std::vector<double> synth(const FourierLoop& x) const {
    std::vector<double> s(static_cast<std::size_t>(grid_size() * x.dim()));
    basis_.synthesize(x, s);
    return s;
  }

  ActionValue evaluate(const FourierLoop& x, FourierLoop* grad) const {
    check(x);
    ActionValue out;
    out.grid_size = grid_size();
    out.kinetic = detail::rotating_kinetic(x, params_.omega, grad);
    const auto s = synth(x);
    std::vector<double> force;
    out.potential = detail::pair_potential(s, grid_size(), x.dim(), params_.n, params_.alpha, grad ? &force : nullptr);
    out.total = out.kinetic + out.potential;
    if (grad) {
      const double w = two_pi / grid_size();
      for (double& f : force) f *= w;
      basis_.accumulate_transpose(force, *grad);
    }
    return out;
  }

  SystemParams params_;
  GridBasis basis_;
};

/// The Kepler functional 1/2 int |q'|^2 + int |q|^-alpha.
class KeplerAction {
 public:
  KeplerAction(double alpha, int dim, int cutoff, int grid = 0)
      : alpha_(alpha), dim_(dim), basis_(cutoff, grid == 0 ? default_grid_size(cutoff, 1) : grid) {
    if (!(alpha > 0.0)) throw Error("KeplerAction: alpha must be > 0");
    if (dim < 2) throw Error("KeplerAction: d must be >= 2");
  }

  double alpha() const noexcept { return alpha_; }
  int cutoff() const noexcept { return basis_.cutoff(); }
  int dim() const noexcept { return dim_; }
  int grid_size() const noexcept { return basis_.grid_size(); }

  ActionValue value(const FourierLoop& q) const { return evaluate(q, nullptr); }

  ActionValue value_and_gradient(const FourierLoop& q, FourierLoop& grad) const {
    grad = FourierLoop(q.dim(), q.cutoff());
    return evaluate(q, &grad);
  }

  /// L^2 grid norm of q'' + alpha q / |q|^{alpha+2}.
  double newton_residual(const FourierLoop& q) const {
    check(q);
    const int m = grid_size(), d = q.dim();
    std::vector<double> s(static_cast<std::size_t>(m * d)), acc(s.size()), force;
    basis_.synthesize(q, s);
    basis_.synthesize(derivative(derivative(q)), acc);
    central(s, &force);
    for (std::size_t i = 0; i < s.size(); ++i) acc[i] -= force[i];
    return detail::grid_l2(acc, m);
  }

 private:
  void check(const FourierLoop& q) const {
    if (q.dim() != dim_) throw DimensionError("KeplerAction: dimension mismatch");
    if (q.cutoff() != cutoff()) throw DimensionError("KeplerAction: cutoff mismatch");
  }

  // sum_j |q_j|^-alpha, with force -alpha q_j/|q_j|^{alpha+2}
  double central(const std::vector<double>& s, std::vector<double>* force) const {
    const int m = grid_size();
    double pot = 0.0;
    if (force) force->assign(s.size(), 0.0);
    for (int j = 0; j < m; ++j) {
      const double* q = s.data() + static_cast<std::size_t>(j * dim_);
      double r2 = 0.0;
      for (int i = 0; i < dim_; ++i) r2 += q[i] * q[i];
      if (!(r2 >= collision_guard * collision_guard)) throw CollisionError(two_pi * j / m, 0, std::sqrt(r2));
      const double inv = std::pow(r2, -0.5 * alpha_);
      pot += inv;
      if (force) {
        double* f = force->data() + static_cast<std::size_t>(j * dim_);
        for (int i = 0; i < dim_; ++i) f[i] = -alpha_ * inv / r2 * q[i];
      }
    }
    return pot;
  }

  ActionValue evaluate(const FourierLoop& q, FourierLoop* grad) const {
    check(q);
    ActionValue out;
    out.grid_size = grid_size();
    out.kinetic = detail::rotating_kinetic(q, 0.0, grad);
    std::vector<double> s(static_cast<std::size_t>(grid_size() * dim_)), force;
    basis_.synthesize(q, s);
    const double w = two_pi / grid_size();
    out.potential = w * central(s, grad ? &force : nullptr);
    out.total = out.kinetic + out.potential;
    if (grad) {
      for (double& f : force) f *= w;
      basis_.accumulate_transpose(force, *grad);
    }
    return out;
  }

  double alpha_;
  int dim_;
  GridBasis basis_;
};

// ---------------------------------------------------------------------------------------------
// Free-function entry points

inline ActionValue kepler_action(const FourierLoop& q, double alpha, int grid = 0) {
  return KeplerAction(alpha, q.dim(), q.cutoff(), grid).value(q);
}

struct KeplerCircle {
  double radius = 0.0;
  double l2 = 0.0;  ///< int |q|^2 over the period
  double action = 0.0;
};

/// Best unit-winding circle for the Kepler action: pi R^2 + 2 pi R^-alpha is least at R^(alpha+2) = alpha.
inline KeplerCircle kepler_circle(double alpha) {
  if (!(alpha > 0.0)) throw Error("kepler_circle: alpha must be > 0");
  KeplerCircle c;
  c.radius = std::pow(alpha, 1.0 / (alpha + 2.0));
  c.l2 = two_pi * c.radius * c.radius;
  c.action = pi * c.radius * c.radius + two_pi * std::pow(c.radius, -alpha);
  return c;
}

/// Inertial choreography action; params.omega is ignored.
inline ActionValue choreography_action(const FourierLoop& x, SystemParams params, int grid = 0) {
  params.omega = 0.0;
  return ChoreographyAction(params, x.cutoff(), grid).value(x);
}

inline ActionValue rotating_action(const FourierLoop& y, const SystemParams& params, int grid = 0) {
  return ChoreographyAction(params, y.cutoff(), grid).value(y);
}

inline FourierLoop gradient(const FourierLoop& x, SystemParams params, Frame frame = Frame::rotating, int grid = 0) {
  if (frame == Frame::inertial) params.omega = 0.0;
  FourierLoop g;
  ChoreographyAction(params, x.cutoff(), grid).value_and_gradient(x, g);
  return g;
}

inline double newton_residual(const FourierLoop& x, SystemParams params, Frame frame = Frame::rotating, int grid = 0) {
  if (frame == Frame::inertial) params.omega = 0.0;
  return ChoreographyAction(params, x.cutoff(), grid).newton_residual(x);
}

}  // namespace choreo
