#pragma once

/// \file optimize.hpp
/// Steepest descent on the action with Armijo backtracking, starting loops, cluster
/// detection and multistart.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "choreo/action.hpp"
#include "choreo/diagnostics.hpp"
#include "choreo/loop.hpp"
#include "choreo/random.hpp"
#include "choreo/spectral.hpp"

namespace choreo {

enum class MetricKind { euclidean, sobolev };

inline const char* to_string(MetricKind m) { return m == MetricKind::sobolev ? "sobolev" : "euclidean"; }

struct DescentConfig {
  int max_iters = 20000;
  double grad_tol = 1e-8;
  double initial_step = 1.0;
  double max_step = 1.0;  ///< cap on the trial step; 1 is the Newton step on the kinetic part
  double backtrack = 0.5;
  double armijo = 1e-4;
  double min_separation_guard = collision_guard;
  std::uint64_t seed = 0;
  int cutoff = 16;
  int grid = 0;  ///< 0 selects the default grid for (cutoff, n)
  SymmetryGroup symmetry = SymmetryGroup::trivial;
  bool pin_mean = false;
  MetricKind metric = MetricKind::sobolev;
  double metric_shift = pi;     ///< s in G = Hess(kinetic) + s I at the initial loop
  bool adaptive_shift = true;   ///< rescale s by (R0 / R)^(alpha + 2), the potential curvature's scaling
  double escape_factor = 1e3;   ///< escape when the loop scale exceeds this multiple of the initial scale
  bool record_history = true;

  void validate() const {
    if (max_iters < 0) throw Error("DescentConfig: max_iters must be >= 0");
    if (!(grad_tol > 0.0) || !(initial_step > 0.0) || !(max_step > 0.0) || !(armijo > 0.0) || !(metric_shift > 0.0))
      throw Error("DescentConfig: tolerances must be positive");
    if (!(backtrack > 0.0 && backtrack < 1.0)) throw Error("DescentConfig: backtrack must lie in (0, 1)");
    if (!(escape_factor > 1.0)) throw Error("DescentConfig: escape_factor must exceed 1");
    if (cutoff < 1) throw Error("DescentConfig: cutoff must be >= 1");
  }
};

/// Inverse of G = Hess(kinetic at omega) + s I, block diagonal in the harmonics.
class KineticMetric {
 public:
  KineticMetric() = default;
  KineticMetric(MetricKind kind, double omega, double shift) : kind_(kind), omega_(omega), shift_(shift) {}

  MetricKind kind() const noexcept { return kind_; }

  // Each harmonic's plane block splits into the pairs (a0, b1) and (b0, a1); on the sums and
  // differences of a pair the kinetic Hessian is pi (k + omega)^2 or pi (k - omega)^2.
  FourierLoop apply_inverse(const FourierLoop& g) const {
    if (kind_ == MetricKind::euclidean) return g;
    FourierLoop d(g.dim(), g.cutoff());
    const double mean_plane = two_pi * omega_ * omega_ + shift_;
    for (int i = 0; i < g.dim(); ++i) d.mean(i) = g.mean(i) / (i < 2 ? mean_plane : shift_);
    for (int k = 1; k <= g.cutoff(); ++k) {
      const double plus = 1.0 / (pi * (k + omega_) * (k + omega_) + shift_);
      const double minus = 1.0 / (pi * (k - omega_) * (k - omega_) + shift_);
      {
        const double u = 0.5 * (g.cos(k, 0) + g.sin(k, 1)) * plus;
        const double v = 0.5 * (g.cos(k, 0) - g.sin(k, 1)) * minus;
        d.cos(k, 0) = u + v;
        d.sin(k, 1) = u - v;
      }
      {
        const double u = 0.5 * (g.sin(k, 0) + g.cos(k, 1)) * minus;
        const double v = 0.5 * (g.sin(k, 0) - g.cos(k, 1)) * plus;
        d.sin(k, 0) = u + v;
        d.cos(k, 1) = u - v;
      }
      for (int i = 2; i < g.dim(); ++i) {
        const double den = pi * k * k + shift_;
        d.cos(k, i) = g.cos(k, i) / den;
        d.sin(k, i) = g.sin(k, i) / den;
      }
    }
    return d;
  }

  /// <u, G v>
  double inner(const FourierLoop& u, const FourierLoop& v) const {
    if (kind_ == MetricKind::euclidean) return u.dot(v);
    FourierLoop gv(v.dim(), v.cutoff());
    detail::rotating_kinetic(v, omega_, &gv);  // gradient of a quadratic form = Hess * v
    return u.dot(gv) + shift_ * u.dot(v);
  }

 private:
  MetricKind kind_ = MetricKind::euclidean;
  double omega_ = 0.0;
  double shift_ = pi;
};

struct IterationRecord {
  int iter = 0;
  double action = 0.0;
  double grad_norm = 0.0;
  double step = 0.0;
  double scale = 0.0;  ///< gyration radius of the iterate
};

enum class StopReason { converged, max_iters, escaped, line_search_failed };

inline const char* to_string(StopReason s) {
  switch (s) {
    case StopReason::converged: return "converged";
    case StopReason::max_iters: return "max_iters";
    case StopReason::escaped: return "escaped";
    case StopReason::line_search_failed: return "line_search_failed";
  }
  return "?";
}

struct ClusterStructure {
  int j = 1;        ///< number of clusters
  int k_tilde = 0;  ///< bodies per cluster
  std::vector<int> assignment;            ///< body -> cluster id
  std::vector<double> drift;              ///< time-averaged centroid norm per cluster
  std::vector<double> distance_profile;   ///< time-averaged |x - x_h|, h = 1..n-1
  bool matches_residue_partition = false; ///< clusters are {i = m mod j}
};

struct MinimizeResult {
  FourierLoop loop;
  ActionValue action;
  double grad_norm = 0.0;
  double newton_residual = 0.0;
  int iters = 0;
  LoopDiagnostics diagnostics;
  std::optional<ClusterStructure> clusters;
  bool converged = false;
  bool escaped_to_infinity = false;
  StopReason stop = StopReason::max_iters;
  double initial_scale = 0.0;
  double final_scale = 0.0;
  std::vector<IterationRecord> history;
};

namespace detail {

inline void constrain(FourierLoop& v, const DescentConfig& cfg) {
  if (cfg.symmetry != SymmetryGroup::trivial) v = project_symmetry(v, cfg.symmetry);
  if (cfg.pin_mean)
    for (int i = 0; i < v.dim(); ++i) v.mean(i) = 0.0;
}

}  // namespace detail

/// Steepest descent in the chosen metric on any action functional.
template <ActionFunctional F>
MinimizeResult minimize_functional(const F& f, FourierLoop x, const DescentConfig& cfg, double metric_omega,
                                   double alpha) {
  cfg.validate();
  if (x.dim() != f.dim() || x.cutoff() != f.cutoff()) throw DimensionError("minimize: initial loop shape mismatch");
  detail::constrain(x, cfg);

  MinimizeResult res;
  res.initial_scale = gyration_radius(x);
  FourierLoop g;
  ActionValue val = f.value_and_gradient(x, g);
  detail::constrain(g, cfg);
  KineticMetric metric(cfg.metric, metric_omega, cfg.metric_shift);
  double shift = cfg.metric_shift;
  double step = cfg.initial_step;
  const double eps = std::numeric_limits<double>::epsilon();

  int it = 0;
  for (;; ++it) {
    const double gn = g.norm();
    const double scale = gyration_radius(x);
    if (cfg.record_history) res.history.push_back({it, val.total, gn, it == 0 ? 0.0 : step, scale});
    if (gn < cfg.grad_tol) {
      res.stop = StopReason::converged;
      break;
    }
    if (scale > cfg.escape_factor * res.initial_scale) {
      res.stop = StopReason::escaped;
      break;
    }
    if (it >= cfg.max_iters) {
      res.stop = StopReason::max_iters;
      break;
    }
    if (cfg.adaptive_shift && cfg.metric == MetricKind::sobolev && res.initial_scale > 0.0) {
      const double ratio = res.initial_scale / scale;
      const double s = std::clamp(cfg.metric_shift * std::pow(ratio, alpha + 2.0), 1e-12, 1e12);
      if (std::abs(s - shift) > 1e-3 * shift) {
        shift = s;
        metric = KineticMetric(cfg.metric, metric_omega, shift);
      }
    }
    FourierLoop dir = metric.apply_inverse(g);
    dir *= -1.0;
    detail::constrain(dir, cfg);
    const double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      res.stop = StopReason::line_search_failed;
      break;
    }

    double t = std::min(2.0 * step, cfg.max_step);
    bool accepted = false;
    FourierLoop trial, gt;
    ActionValue vt;
    bool have_gradient = false;
    // rounding level of the action sums; well inside the 1e-12 monotonicity budget
    const double noise = std::min(5e-13, 64.0 * eps * std::abs(val.total));
    while (t > 1e-16) {
      trial = x;
      trial.axpy(t, dir);
      detail::constrain(trial, cfg);
      try {
        const double expected = cfg.armijo * t * slope;
        if (std::abs(expected) > noise) {
          vt = f.value(trial);
          have_gradient = false;
          accepted = std::isfinite(vt.total) && vt.total <= val.total + expected;
        } else {
          // decrease below the rounding of f: approximate Armijo on the directional derivative
          vt = f.value_and_gradient(trial, gt);
          detail::constrain(gt, cfg);
          have_gradient = true;
          accepted = std::isfinite(vt.total) && vt.total <= val.total + noise &&
                     gt.dot(dir) <= -0.8 * slope;
        }
        if (accepted) break;
      } catch (const CollisionError&) {
      }
      t *= cfg.backtrack;
    }
    if (!accepted) {
      res.stop = StopReason::line_search_failed;
      break;
    }
    step = t;
    x = std::move(trial);
    if (have_gradient) {
      val = vt;
      g = std::move(gt);
    } else {
      val = f.value_and_gradient(x, g);
      detail::constrain(g, cfg);
    }
  }

  res.loop = x;
  res.action = val;
  res.grad_norm = g.norm();
  res.iters = it;
  res.converged = res.stop == StopReason::converged;
  res.escaped_to_infinity = res.stop == StopReason::escaped;
  res.final_scale = gyration_radius(x);
  try {
    res.newton_residual = f.newton_residual(x);
  } catch (const CollisionError&) {
    res.newton_residual = std::numeric_limits<double>::infinity();
  }
  return res;
}

/// Time-averaged pair distances, single-linkage clusters cut at the largest relative gap.
inline ClusterStructure detect_clusters(const FourierLoop& x, const SystemParams& params, double min_gap_ratio = 1.5) {
  const int n = params.n;
  ClusterStructure cs;
  const int grid = std::max(default_grid_size(x.cutoff(), n), ((256 + n - 1) / n) * n);
  const SampledLoop s = sample(x, grid);
  const int step = grid / n;
  cs.distance_profile.assign(static_cast<std::size_t>(n - 1), 0.0);
  for (int h = 1; h < n; ++h) {
    double acc = 0.0;
    for (int j = 0; j < grid; ++j) {
      const auto a = s.at(j);
      const auto b = s.at((j + h * step) % grid);
      double r2 = 0.0;
      for (int i = 0; i < s.dim; ++i) r2 += (a[i] - b[i]) * (a[i] - b[i]);
      acc += std::sqrt(r2);
    }
    cs.distance_profile[h - 1] = acc / grid;
  }

  std::vector<double> sorted = cs.distance_profile;
  std::sort(sorted.begin(), sorted.end());
  double best_ratio = 1.0, threshold = -1.0;
  for (std::size_t q = 0; q + 1 < sorted.size(); ++q) {
    const double r = sorted[q] > 0.0 ? sorted[q + 1] / sorted[q] : std::numeric_limits<double>::infinity();
    if (r > best_ratio) {
      best_ratio = r;
      threshold = 0.5 * (sorted[q] + sorted[q + 1]);
    }
  }
  const bool split = best_ratio >= min_gap_ratio;

  // union-find over bodies, linking i and i+h for every short distance class h
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  };
  for (int h = 1; h < n; ++h) {
    if (split && cs.distance_profile[h - 1] > threshold) continue;
    for (int i = 0; i < n; ++i) parent[find(i)] = find((i + h) % n);
  }
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  int next = 0;
  cs.assignment.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (label[r] < 0) label[r] = next++;
    cs.assignment[i] = label[r];
  }
  cs.j = next;
  cs.k_tilde = n / cs.j;
  cs.matches_residue_partition = n % cs.j == 0;
  for (int i = 0; i < n && cs.matches_residue_partition; ++i)
    if (cs.assignment[i] != cs.assignment[i % cs.j]) cs.matches_residue_partition = false;
  // clusters of i = m mod j also need distinct residues to be distinct clusters
  for (int a = 0; a < cs.j && cs.matches_residue_partition; ++a)
    for (int b = a + 1; b < cs.j; ++b)
      if (cs.assignment[a] == cs.assignment[b]) cs.matches_residue_partition = false;

  cs.drift.assign(static_cast<std::size_t>(cs.j), 0.0);
  std::vector<int> count(static_cast<std::size_t>(cs.j), 0);
  for (int i = 0; i < n; ++i) ++count[cs.assignment[i]];
  for (int j = 0; j < grid; ++j) {
    std::vector<std::vector<double>> centroid(static_cast<std::size_t>(cs.j), std::vector<double>(s.dim, 0.0));
    for (int i = 0; i < n; ++i) {
      const auto p = s.at((j + i * step) % grid);
      for (int c = 0; c < s.dim; ++c) centroid[cs.assignment[i]][c] += p[c] / count[cs.assignment[i]];
    }
    for (int c = 0; c < cs.j; ++c) {
      double r2 = 0.0;
      for (double v : centroid[c]) r2 += v * v;
      cs.drift[c] += std::sqrt(r2) / grid;
    }
  }
  return cs;
}

inline ClusterStructure detect_clusters(const MinimizeResult& r, const SystemParams& params) {
  return detect_clusters(r.loop, params);
}

/// Descent on the choreography action of `params` (rotating when params.omega > 0).
inline MinimizeResult minimize(const SystemParams& params, const FourierLoop& init, const DescentConfig& cfg) {
  params.validate();
  if (init.dim() != params.d) throw DimensionError("minimize: loop dimension differs from params.d");
  const FourierLoop start = init.cutoff() == cfg.cutoff ? init : init.with_cutoff(cfg.cutoff);
  const ChoreographyAction f(params, cfg.cutoff, cfg.grid);
  MinimizeResult r = minimize_functional(f, start, cfg, params.omega, params.alpha);
  r.diagnostics = diagnostics(r.loop, params);
  r.clusters = detect_clusters(r.loop, params);
  return r;
}

/// Descent on the Kepler functional; the mean is pinned to zero.
inline MinimizeResult minimize_kepler(double alpha, const FourierLoop& init, DescentConfig cfg) {
  cfg.pin_mean = true;
  const FourierLoop start = init.cutoff() == cfg.cutoff ? init : init.with_cutoff(cfg.cutoff);
  const KeplerAction f(alpha, init.dim(), cfg.cutoff, cfg.grid);
  MinimizeResult r = minimize_functional(f, start, cfg, 0.0, alpha);
  r.diagnostics = diagnostics(r.loop, SystemParams{2, init.dim(), alpha, 0.0});
  return r;
}

// ---------------------------------------------------------------------------------------------
// Starting loops

/// Planar circle of winding m and radius R plus seeded uniform noise on every harmonic.
inline FourierLoop init_circle(const SystemParams& params, int winding, double radius, double noise,
                               std::uint64_t seed, int cutoff) {
  FourierLoop x = circle_loop(params.d, cutoff, radius, winding);
  Rng rng(seed);
  add_noise(x, rng, noise);
  const int g = std::gcd(std::abs(winding), params.n);
  if (g != 1) {
    const double sep = min_separation(x, params.n);
    if (!(sep >= collision_guard)) throw CollisionError(0.0, params.n / g, sep);
  }
  return x;
}

/// Cluster ansatz C exp(-J w t) + r exp(J (s - w) t) plus seeded noise.
inline FourierLoop init_cluster(const SystemParams& params, int winding, double centre_radius, double inner_radius,
                                int inner_sign, double noise, std::uint64_t seed, int cutoff) {
  FourierLoop x = cluster_ansatz_loop(params.d, cutoff, winding, centre_radius, inner_radius, inner_sign);
  Rng rng(seed);
  add_noise(x, rng, noise);
  return x;
}

/// A start adapted to the classifier's verdict.
inline FourierLoop suggest_init(const RegimeReport& rep, int dim, double noise, std::uint64_t seed, int cutoff) {
  const SystemParams p{rep.n, dim, rep.alpha, rep.omega};
  const int shift = rep.l * rep.n;
  const int k = static_cast<int>(std::lround(rep.omega_bar)) + shift;
  switch (rep.regime) {
    case Regime::inertial_circle:
    case Regime::rotating_circle:
    case Regime::near_n_translated_circle:
      return init_circle(p, *rep.predicted_winding, *rep.predicted_radius, noise, seed, cutoff);
    case Regime::no_minimum_coprime_int:
      return init_circle(p, -k, 1.0, noise, seed, cutoff);
    case Regime::inf_not_attained_cluster: {
      // the ansatz optimum recedes to infinity here; start from a tight configuration instead
      const int w = std::abs(k);
      const double inner = circle_optimum(std::gcd(w, rep.n), rep.alpha, 0.0, 1).radius;
      return init_cluster(p, w, 4.0 * inner, inner, 1, noise, seed, cutoff);
    }
    case Regime::nonrigid_winding_k: {
      const int w = std::abs(k);
      const auto a = cluster_ansatz(rep.n, rep.alpha, rep.omega, w);
      return init_cluster(p, w, a.centre_radius, a.inner_radius, a.inner_sign, noise, seed, cutoff);
    }
    case Regime::continuum_omega_n:
      return init_circle(p, 1 - shift, circle_optimum(rep.n, rep.alpha, 0.0, 1).radius, noise, seed, cutoff);
    case Regime::undetermined:
      break;
  }
  if (rep.hypothesis && !rep.hypothesis->best.empty()) {
    const auto& c = rep.hypothesis->best.front();
    return init_circle(p, c.winding, c.radius, noise, seed, cutoff);
  }
  return init_circle(p, -1, 1.0, noise, seed, cutoff);
}

// ---------------------------------------------------------------------------------------------
// Multistart

struct StartSpec {
  enum class Kind { circle, cluster, loop } kind = Kind::circle;
  int winding = 1;
  double radius = 1.0;
  double inner_radius = 0.3;
  int inner_sign = 1;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::optional<FourierLoop> loop;
};

struct MultistartRow {
  std::size_t start = 0;
  std::uint64_t seed = 0;
  std::string error;  ///< non-empty when the start could not be built or run
  MinimizeResult result;
};

struct MultistartResult {
  std::size_t best = 0;
  std::vector<MultistartRow> table;
};

/// Thread cap from CHOREO_THREADS (default: hardware concurrency, at least 1).
inline unsigned thread_cap() {
  unsigned cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("CHOREO_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) cap = static_cast<unsigned>(v);
  }
  return cap;
}

inline FourierLoop build_start(const SystemParams& params, const StartSpec& s, int cutoff) {
  switch (s.kind) {
    case StartSpec::Kind::circle: return init_circle(params, s.winding, s.radius, s.noise, s.seed, cutoff);
    case StartSpec::Kind::cluster:
      return init_cluster(params, s.winding, s.radius, s.inner_radius, s.inner_sign, s.noise, s.seed, cutoff);
    case StartSpec::Kind::loop:
      if (!s.loop) throw Error("multistart: loop start without a loop");
      return s.loop->cutoff() == cutoff ? *s.loop : s.loop->with_cutoff(cutoff);
  }
  throw Error("multistart: unknown start kind");
}

/// Independent runs, merged by (action, seed); runs that escape or fail rank last.
inline MultistartResult multistart(const SystemParams& params, const DescentConfig& cfg,
                                   const std::vector<StartSpec>& starts) {
  MultistartResult out;
  out.table.resize(starts.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < starts.size(); i = next++) {
      auto& row = out.table[i];
      row.start = i;
      row.seed = starts[i].seed;
      try {
        DescentConfig c = cfg;
        c.seed = starts[i].seed;
        row.result = minimize(params, build_start(params, starts[i], cfg.cutoff), c);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
    }
  };
  const unsigned nthreads = std::min<unsigned>(thread_cap(), static_cast<unsigned>(std::max<std::size_t>(1, starts.size())));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  auto rank = [](const MultistartRow& r) {
    return !r.error.empty() ? 2 : (r.result.escaped_to_infinity ? 1 : 0);
  };
  for (std::size_t i = 1; i < out.table.size(); ++i) {
    const auto& a = out.table[i];
    const auto& b = out.table[out.best];
    if (rank(a) < rank(b) ||
        (rank(a) == rank(b) && (a.result.action.total < b.result.action.total ||
                                (a.result.action.total == b.result.action.total && a.seed < b.seed))))
      out.best = i;
  }
  return out;
}

}  // namespace choreo
