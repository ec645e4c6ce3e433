#pragma once

/// \file mountain_pass.hpp
/// Discrete minimax over paths of loops joining two minima, followed by a climbing-image
/// refinement and a Newton polish of the highest node.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "choreo/action.hpp"
#include "choreo/diagnostics.hpp"
#include "choreo/loop.hpp"
#include "choreo/optimize.hpp"
#include "choreo/random.hpp"

namespace choreo {

struct MountainPassConfig {
  int nodes = 21;
  int cutoff = 12;
  int grid = 0;
  SymmetryGroup symmetry = SymmetryGroup::trivial;
  int max_iters = 4000;        ///< path deformation sweeps
  bool local_sweeps = false;   ///< move only the highest node and its neighbours instead of every interior node
  double step = 0.2;           ///< metric gradient step per sweep
  double stall_tol = 1e-10;    ///< stop deforming when the max drops less than this over `stall_window` sweeps
  int stall_window = 50;
  int climb_iters = 2000;
  double climb_switch = 1e-4;  ///< gradient norm at which the Newton polish takes over
  int newton_iters = 30;
  double saddle_tol = 1e-6;
  double metric_shift = pi;
  int refine_limit = 8;        ///< bisection depth when an interpolated node collides
  std::optional<FourierLoop> lift;  ///< added with weight sin(pi s) to the initial straight path
  std::uint64_t seed = 0;      ///< probe directions
  int probe_directions = 20;
  double probe_step = 1e-4;

  void validate() const {
    if (nodes < 3) throw Error("MountainPassConfig: need at least 3 nodes");
    if (cutoff < 1) throw Error("MountainPassConfig: cutoff must be >= 1");
    if (!(saddle_tol > 0.0) || !(metric_shift > 0.0) || !(probe_step > 0.0) || !(step > 0.0))
      throw Error("MountainPassConfig: tolerances must be positive");
    if (max_iters < 0 || climb_iters < 0 || newton_iters < 0 || stall_window < 1)
      throw Error("MountainPassConfig: iteration counts must be non-negative");
  }
};

struct LoopPath {
  std::vector<FourierLoop> nodes;
  std::vector<double> actions;

  std::size_t max_index() const {
    return static_cast<std::size_t>(std::max_element(actions.begin(), actions.end()) - actions.begin());
  }
  double max_action() const { return actions.empty() ? 0.0 : *std::max_element(actions.begin(), actions.end()); }
};

struct PathProfileEntry {
  std::size_t node = 0;
  double action = 0.0;
};

struct PathProfile {
  std::vector<PathProfileEntry> entries;
  std::size_t max_node = 0;
};

inline PathProfile path_energy_profile(const LoopPath& path) {
  PathProfile p;
  for (std::size_t i = 0; i < path.actions.size(); ++i) p.entries.push_back({i, path.actions[i]});
  if (!path.actions.empty()) p.max_node = path.max_index();
  return p;
}

struct SaddleProbe {
  double tangent_curvature = 0.0;              ///< second difference along the path direction
  std::vector<double> transverse_curvatures;   ///< along random directions orthogonal to it
  double min_transverse = 0.0;
};

struct SaddleResult {
  FourierLoop loop;
  double action = 0.0;
  double grad_norm = 0.0;
  double newton_residual = 0.0;
  double min_separation = 0.0;
  bool converged = false;
  bool degenerate = false;  ///< equal endpoints
  int sweeps = 0;
  int climb_iters = 0;
  int newton_iters = 0;
  std::size_t max_node = 0;
  std::vector<double> max_history;  ///< path maximum after every deformation sweep
  LoopPath path;
  std::vector<LoopPath> path_history;  ///< checkpoints: initial path and final path
  std::optional<SaddleProbe> probe;
  FourierLoop tangent;  ///< unit path direction at the highest node
};

class MountainPassError : public Error {
 public:
  MountainPassError(const std::string& what, std::size_t segment) : Error(what), segment_(segment) {}
  std::size_t segment() const noexcept { return segment_; }

 private:
  std::size_t segment_;
};

namespace detail {

inline FourierLoop lerp(const FourierLoop& a, const FourierLoop& b, double s) {
  FourierLoop out = a;
  out *= (1.0 - s);
  out.axpy(s, b);
  return out;
}

/// Coefficient mask of the coordinates left free by a symmetry projector.
inline std::vector<int> free_coordinates(int dim, int cutoff, SymmetryGroup g) {
  FourierLoop ones(dim, cutoff);
  for (double& c : ones.coeffs()) c = 1.0;
  const FourierLoop kept = project_symmetry(ones, g);
  std::vector<int> idx;
  for (std::size_t i = 0; i < kept.coeffs().size(); ++i)
    if (kept.coeffs()[i] != 0.0) idx.push_back(static_cast<int>(i));
  return idx;
}

class PathWorker {
 public:
  PathWorker(const SystemParams& p, const MountainPassConfig& cfg)
      : cfg_(cfg), f_(p, cfg.cutoff, cfg.grid), metric_(MetricKind::sobolev, p.omega, cfg.metric_shift) {}

  const ChoreographyAction& action() const { return f_; }
  const KineticMetric& metric() const { return metric_; }

  double value(const FourierLoop& x) const { return f_.value(x).total; }

  FourierLoop gradient(const FourierLoop& x, double* val = nullptr) const {
    FourierLoop g;
    const auto v = f_.value_and_gradient(x, g);
    if (val) *val = v.total;
    return project_symmetry(g, cfg_.symmetry);
  }

  /// Value at the interpolation point s in [0, 1] of segment (a, b); bisects towards
  /// collision-free parameters when the exact point collides.
  std::optional<std::pair<FourierLoop, double>> safe_point(const FourierLoop& a, const FourierLoop& b, double s,
                                                           const FourierLoop* lift, double lift_weight) const {
    for (int r = 0; r <= cfg_.refine_limit; ++r) {
      const double shift = r == 0 ? 0.0 : std::ldexp(1.0, -r - 1) * ((r % 2) ? 1.0 : -1.0);
      const double ss = std::clamp(s + shift, 0.0, 1.0);
      FourierLoop x = lerp(a, b, ss);
      if (lift) x.axpy(lift_weight, *lift);
      x = project_symmetry(x, cfg_.symmetry);
      try {
        return std::make_pair(x, value(x));
      } catch (const CollisionError&) {
      }
    }
    return std::nullopt;
  }

 private:
  MountainPassConfig cfg_;
  ChoreographyAction f_;
  KineticMetric metric_;
};

/// Re-space the nodes uniformly in coefficient arclength.
inline std::optional<LoopPath> reparametrize(const LoopPath& path, const PathWorker& w) {
  const std::size_t P = path.nodes.size();
  std::vector<double> cum(P, 0.0);
  for (std::size_t i = 1; i < P; ++i) {
    FourierLoop d = path.nodes[i];
    d -= path.nodes[i - 1];
    cum[i] = cum[i - 1] + d.norm();
  }
  const double L = cum.back();
  if (!(L > 0.0)) return path;
  LoopPath out;
  out.nodes.push_back(path.nodes.front());
  out.actions.push_back(path.actions.front());
  std::size_t seg = 0;
  for (std::size_t j = 1; j + 1 < P; ++j) {
    const double target = L * static_cast<double>(j) / static_cast<double>(P - 1);
    while (seg + 2 < P && cum[seg + 1] < target) ++seg;
    const double len = cum[seg + 1] - cum[seg];
    const double s = len > 0.0 ? (target - cum[seg]) / len : 0.0;
    auto pt = w.safe_point(path.nodes[seg], path.nodes[seg + 1], s, nullptr, 0.0);
    if (!pt) return std::nullopt;
    out.nodes.push_back(pt->first);
    out.actions.push_back(pt->second);
  }
  out.nodes.push_back(path.nodes.back());
  out.actions.push_back(path.actions.back());
  return out;
}

inline FourierLoop unit_tangent(const LoopPath& path, std::size_t m) {
  const std::size_t P = path.nodes.size();
  const std::size_t lo = m == 0 ? 0 : m - 1;
  const std::size_t hi = std::min(P - 1, m + 1);
  FourierLoop t = path.nodes[hi];
  t -= path.nodes[lo];
  const double nrm = t.norm();
  if (nrm > 0.0) t *= 1.0 / nrm;
  return t;
}

/// Newton iteration on the gradient with a central-difference Hessian restricted to the
/// symmetry-free coordinates; pseudo-inverse handles the continuous symmetries.
inline int newton_polish(FourierLoop& x, const PathWorker& w, const std::vector<int>& free, int max_iters,
                         double target) {
  const int N = static_cast<int>(free.size());
  FourierLoop g = w.gradient(x);
  int it = 0;
  for (; it < max_iters && g.norm() > target; ++it) {
    Eigen::MatrixXd H(N, N);
    const double h = 1e-5 * std::max(1.0, x.norm() / std::sqrt(static_cast<double>(N)));
    for (int j = 0; j < N; ++j) {
      FourierLoop xp = x, xm = x;
      xp.coeffs()[free[j]] += h;
      xm.coeffs()[free[j]] -= h;
      const FourierLoop gp = w.gradient(xp), gm = w.gradient(xm);
      for (int i = 0; i < N; ++i) H(i, j) = (gp.coeffs()[free[i]] - gm.coeffs()[free[i]]) / (2.0 * h);
    }
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::VectorXd rhs(N);
    for (int i = 0; i < N; ++i) rhs(i) = g.coeffs()[free[i]];
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const Eigen::VectorXd& lam = es.eigenvalues();
    const double cut = 1e-9 * lam.cwiseAbs().maxCoeff();
    Eigen::VectorXd c = es.eigenvectors().transpose() * rhs;
    for (int i = 0; i < N; ++i) c(i) = std::abs(lam(i)) > cut ? c(i) / lam(i) : 0.0;
    const Eigen::VectorXd delta = -(es.eigenvectors() * c);
    double t = 1.0;
    bool moved = false;
    for (int k = 0; k < 12; ++k, t *= 0.5) {
      FourierLoop trial = x;
      for (int i = 0; i < N; ++i) trial.coeffs()[free[i]] += t * delta(i);
      try {
        FourierLoop gt = w.gradient(trial);
        if (gt.norm() < g.norm()) {
          x = std::move(trial);
          g = std::move(gt);
          moved = true;
          break;
        }
      } catch (const CollisionError&) {
      }
    }
    if (!moved) break;
  }
  return it;
}

}  // namespace detail

/// Second differences of the action at x: along `tangent` and along random unit directions
/// orthogonal to it (restricted to the symmetry-free coordinates).
inline SaddleProbe saddle_probe(const FourierLoop& x, const FourierLoop& tangent, const SystemParams& params,
                                const MountainPassConfig& cfg) {
  const ChoreographyAction f(params, cfg.cutoff, cfg.grid);
  const double h = cfg.probe_step;
  const double f0 = f.value(x).total;
  auto curv = [&](const FourierLoop& v) {
    FourierLoop a = x, b = x;
    a.axpy(h, v);
    b.axpy(-h, v);
    return (f.value(a).total + f.value(b).total - 2.0 * f0) / (h * h);
  };
  SaddleProbe p;
  FourierLoop t = project_symmetry(tangent, cfg.symmetry);
  const double tn = t.norm();
  if (tn > 0.0) t *= 1.0 / tn;
  p.tangent_curvature = curv(t);
  Rng rng(cfg.seed);
  p.min_transverse = std::numeric_limits<double>::infinity();
  for (int i = 0; i < cfg.probe_directions; ++i) {
    FourierLoop v = project_symmetry(random_loop(x.dim(), x.cutoff(), rng, 1.0, true), cfg.symmetry);
    v.axpy(-v.dot(t), t);
    v *= 1.0 / v.norm();
    const double c = curv(v);
    p.transverse_curvatures.push_back(c);
    p.min_transverse = std::min(p.min_transverse, c);
  }
  return p;
}

inline SaddleResult mountain_pass(const FourierLoop& endA, const FourierLoop& endB, const SystemParams& params,
                                  const MountainPassConfig& cfg) {
  cfg.validate();
  params.validate();
  if (!endA.same_shape(endB)) throw DimensionError("mountain_pass: endpoints differ in shape");
  if (endA.dim() != params.d) throw DimensionError("mountain_pass: endpoint dimension differs from params.d");
  const FourierLoop A = endA.cutoff() == cfg.cutoff ? endA : endA.with_cutoff(cfg.cutoff);
  const FourierLoop B = endB.cutoff() == cfg.cutoff ? endB : endB.with_cutoff(cfg.cutoff);
  const detail::PathWorker w(params, cfg);

  SaddleResult res;
  if (A == B) {
    res.loop = A;
    res.action = w.value(A);
    res.grad_norm = w.gradient(A).norm();
    res.newton_residual = w.action().newton_residual(A);
    res.min_separation = min_separation(A, params.n);
    res.degenerate = true;
    res.converged = res.grad_norm < cfg.saddle_tol;
    res.path.nodes.assign(static_cast<std::size_t>(cfg.nodes), A);
    res.path.actions.assign(static_cast<std::size_t>(cfg.nodes), res.action);
    res.path_history.push_back(res.path);
    res.tangent = FourierLoop(A.dim(), A.cutoff());
    return res;
  }

  // initial path: straight segment plus the optional lift
  LoopPath path;
  const std::size_t P = static_cast<std::size_t>(cfg.nodes);
  for (std::size_t i = 0; i < P; ++i) {
    if (i == 0 || i + 1 == P) {
      const FourierLoop& e = i == 0 ? A : B;
      path.nodes.push_back(e);
      path.actions.push_back(w.value(e));
      continue;
    }
    const double s = static_cast<double>(i) / static_cast<double>(P - 1);
    auto pt = w.safe_point(A, B, s, cfg.lift ? &*cfg.lift : nullptr, std::sin(pi * s));
    if (!pt) throw MountainPassError("mountain_pass: initial path collides near node " + std::to_string(i), i - 1);
    path.nodes.push_back(pt->first);
    path.actions.push_back(pt->second);
  }
  res.path_history.push_back(path);

  // deformation: a metric gradient step on the interior nodes followed by re-spacing; a sweep
  // that raises the path maximum is undone and retried with half the step
  if (auto rp = detail::reparametrize(path, w)) path = std::move(*rp);
  double eta = cfg.step;
  res.max_history.push_back(path.max_action());
  for (int it = 0; it < cfg.max_iters && eta > 1e-12; ++it) {
    const std::size_t m = path.max_index();
    const double before = path.max_action();
    const std::size_t lo = cfg.local_sweeps ? (m > 1 ? m - 1 : 1) : 1;
    const std::size_t hi = cfg.local_sweeps ? std::min(m + 1, P - 2) : P - 2;
    LoopPath trial = path;
    bool ok = true;
    for (std::size_t i = lo; i <= hi && ok; ++i) {
      try {
        const FourierLoop d = w.metric().apply_inverse(w.gradient(trial.nodes[i]));
        trial.nodes[i].axpy(-eta, d);
        trial.nodes[i] = project_symmetry(trial.nodes[i], cfg.symmetry);
        trial.actions[i] = w.value(trial.nodes[i]);
      } catch (const CollisionError&) {
        ok = false;
      }
    }
    std::optional<LoopPath> rp;
    if (ok) rp = detail::reparametrize(trial, w);
    if (!rp || rp->max_action() > before + 1e-12) {
      eta *= 0.5;
      continue;
    }
    path = std::move(*rp);
    eta = std::min(cfg.step, 1.5 * eta);
    res.max_history.push_back(path.max_action());
    res.sweeps = it + 1;
    const std::size_t k = res.max_history.size();
    if (k > static_cast<std::size_t>(cfg.stall_window) &&
        res.max_history[k - 1 - cfg.stall_window] - res.max_history[k - 1] < cfg.stall_tol)
      break;
  }
  res.path = path;
  res.path_history.push_back(path);
  res.max_node = path.max_index();
  res.tangent = detail::unit_tangent(path, res.max_node);

  // climbing image on a copy of the highest node
  FourierLoop x = path.nodes[res.max_node];
  FourierLoop tan = res.tangent;
  const double tg = std::sqrt(w.metric().inner(tan, tan));
  FourierLoop tG = tan;
  if (tg > 0.0) tG *= 1.0 / tg;  // unit in the metric
  eta = 0.5;
  FourierLoop g = w.gradient(x);
  for (int it = 0; it < cfg.climb_iters && g.norm() > cfg.climb_switch; ++it) {
    FourierLoop v = w.metric().apply_inverse(g);
    v *= -1.0;
    v.axpy(2.0 * g.dot(tG), tG);
    v = project_symmetry(v, cfg.symmetry);
    FourierLoop trial = x;
    trial.axpy(eta, v);
    try {
      FourierLoop gt = w.gradient(trial);
      if (gt.norm() < g.norm()) {
        x = std::move(trial);
        g = std::move(gt);
        eta = std::min(1.0, 1.2 * eta);
        res.climb_iters = it + 1;
        continue;
      }
    } catch (const CollisionError&) {
    }
    eta *= 0.5;
    if (eta < 1e-12) break;
  }

  const auto free = detail::free_coordinates(A.dim(), cfg.cutoff, cfg.symmetry);
  res.newton_iters = detail::newton_polish(x, w, free, cfg.newton_iters, 1e-3 * cfg.saddle_tol);

  res.loop = x;
  res.action = w.value(x);
  res.grad_norm = w.gradient(x).norm();
  res.newton_residual = w.action().newton_residual(x);
  res.min_separation = min_separation(x, params.n);
  res.converged = res.grad_norm < cfg.saddle_tol;
  res.probe = saddle_probe(x, res.tangent, params, cfg);
  return res;
}

// ---------------------------------------------------------------------------------------------
// Shape checks for the symmetric run

struct EightCheck {
  double sup_out_of_plane = 0.0;  ///< sup |x_3|
  int sign_changes = 0;           ///< sign changes of x_2 per period
  double lobe_area_left = 0.0;    ///< signed area swept while x_2 > 0
  double lobe_area_right = 0.0;   ///< signed area swept while x_2 < 0
  int winding = 0;                ///< about the origin in the (x_1, x_2) plane
  bool is_eight = false;
};

inline EightCheck eight_check(const FourierLoop& x, int samples = 2048) {
  if (x.dim() != 3) throw DimensionError("eight_check: requires d = 3");
  EightCheck e;
  const SampledLoop s = sample(x, samples);
  double turns = 0.0;
  double prev_angle = 0.0;
  for (int j = 0; j <= samples; ++j) {
    const auto p = s.at(j % samples);
    const auto q = s.at((j + 1) % samples);
    if (j < samples) {
      e.sup_out_of_plane = std::max(e.sup_out_of_plane, std::abs(p[2]));
      if ((p[1] > 0.0) != (q[1] > 0.0)) ++e.sign_changes;
      const double cross = p[0] * q[1] - p[1] * q[0];
      if (p[1] + q[1] > 0.0)
        e.lobe_area_left += 0.5 * cross;
      else
        e.lobe_area_right += 0.5 * cross;
    }
    const double ang = std::atan2(p[1], p[0]);
    if (j > 0) {
      double d = ang - prev_angle;
      while (d > pi) d -= two_pi;
      while (d < -pi) d += two_pi;
      turns += d;
    }
    prev_angle = ang;
  }
  e.winding = static_cast<int>(std::lround(turns / two_pi));
  e.is_eight = e.sign_changes == 2 && e.winding == 0 && e.lobe_area_left * e.lobe_area_right < 0.0;
  return e;
}

}  // namespace choreo
