#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "choreo/bounds.hpp"
#include "choreo/diagnostics.hpp"
#include "choreo/io.hpp"
#include "choreo/random.hpp"
#include "choreo/spectral.hpp"

namespace choreo {

enum class Suite { inequalities, spectral, chain, all };

inline Suite suite_from_string(const std::string& s) {
  if (s == "inequalities") return Suite::inequalities;
  if (s == "spectral") return Suite::spectral;
  if (s == "chain") return Suite::chain;
  if (s == "all") return Suite::all;
  throw ConfigError("unknown suite '" + s + "'");
}

/// Deliberate corruption used to check that the harness notices.
enum class Fault { none, flip_delta1 };

inline Fault fault_from_string(const std::string& s) {
  if (s == "none" || s.empty()) return Fault::none;
  if (s == "flip-delta1") return Fault::flip_delta1;
  throw ConfigError("unknown fault '" + s + "'");
}

struct VerifyOptions {
  int seeds = 200;  ///< random loops per configuration
  Fault fault = Fault::none;
};

struct CheckResult {
  std::string suite;
  std::string name;
  bool passed = true;
  long samples = 0;
  long skipped = 0;  ///< random loops rejected for near-collision
  double worst = 0.0;
  double tolerance = 0.0;
  std::string detail;  ///< first failing case
};

struct VerifyReport {
  std::vector<CheckResult> checks;

  bool passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
  }
};

inline Json to_json(const CheckResult& c) {
  return Json{{"suite", c.suite},   {"name", c.name},           {"passed", c.passed},     {"samples", c.samples},
              {"skipped", c.skipped}, {"worst", c.worst}, {"tolerance", c.tolerance}, {"detail", c.detail}};
}

inline Json to_json(const VerifyReport& r) {
  Json arr = Json::array();
  for (const auto& c : r.checks) arr.push_back(to_json(c));
  return Json{{"passed", r.passed()}, {"checks", arr}};
}

namespace detail {

/// Tracks the worst value of a quantity that must stay >= -tol (lower) or <= tol (upper).
class Tracker {
 public:
  Tracker(std::string suite, std::string name, double tol, bool upper)
      : upper_(upper) {
    r_.suite = std::move(suite);
    r_.name = std::move(name);
    r_.tolerance = tol;
    r_.worst = upper ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
  }

  void add(double v, const std::string& where) {
    ++r_.samples;
    const bool bad = !std::isfinite(v) || (upper_ ? v > r_.tolerance : v < -r_.tolerance);
    r_.worst = upper_ ? std::max(r_.worst, v) : std::min(r_.worst, v);
    if (!std::isfinite(v)) r_.worst = v;
    if (bad && r_.passed) {
      r_.passed = false;
      r_.detail = where + ": value " + num(v);
    }
  }
  void skip() { ++r_.skipped; }
  CheckResult done() {
    if (r_.samples == 0) {
      r_.passed = false;
      r_.detail = "no samples";
    }
    return r_;
  }

 private:
  CheckResult r_;
  bool upper_;
};

inline std::string tag(std::initializer_list<std::pair<const char*, double>> kv) {
  std::string s;
  for (const auto& [k, v] : kv) s += (s.empty() ? "" : " ") + std::string(k) + "=" + num(v);
  return s;
}

inline Rng check_rng(int check_id, int seed) {
  return Rng(static_cast<std::uint64_t>(check_id) * 1000003ULL + static_cast<std::uint64_t>(seed));
}

inline CirculantSpectrum spectrum_under_fault(int n, double alpha, Fault f) {
  auto s = circulant_spectrum(n, alpha);
  if (f == Fault::flip_delta1 && s.deltas.size() > 1) s.deltas[1] = -s.deltas[1];
  return s;
}

struct ChainConfig {
  int n;
  double alpha;
};

inline std::vector<ChainConfig> random_configs() {
  std::vector<ChainConfig> out;
  for (int n : {2, 3, 5, 8})
    for (double a : {0.5, 1.0, 2.0}) out.push_back({n, a});
  return out;
}

// ----- inequalities

inline void run_inequalities(const VerifyOptions& o, std::vector<CheckResult>& out) {
  const std::string S = "inequalities";
  {
    Tracker bound(S, "poincare.bound", 1e-12, false), strict(S, "poincare.strict_off_first_harmonic", 0.0, false),
        eq(S, "poincare.first_harmonic_equality", 1e-12, true);
    for (int s = 0; s < o.seeds; ++s) {
      Rng rng = check_rng(1, s);
      const int dim = 2 + s % 3, K = 1 + s % 7;
      auto q = random_loop(dim, K, rng);
      const double r = poincare_ratio(q);
      const std::string w = tag({{"seed", double(s)}});
      bound.add(r - 1.0, w);
      if (!first_harmonic_only(q)) strict.add(r > 1.0 ? r - 1.0 : -1.0, w);
      FourierLoop c(dim, K);
      for (int i = 0; i < dim; ++i) {
        c.cos(1, i) = q.cos(1, i);
        c.sin(1, i) = q.sin(1, i);
      }
      eq.add(std::abs(poincare_ratio(c) - 1.0), w);
    }
    out.push_back(bound.done());
    out.push_back(strict.done());
    out.push_back(eq.done());
  }
  {
    Tracker gap(S, "jensen.nonnegative", 1e-10, false), circ(S, "jensen.circle_equality", 1e-12, true);
    int id = 0;
    for (const auto& c : random_configs()) {
      SystemParams p{c.n, 2 + c.n % 2, c.alpha, 0.0};
      for (int s = 0; s < o.seeds; ++s) {
        Rng rng = check_rng(100 + id, s);
        auto x = random_loop(p.d, 5, rng);
        try {
          for (int h = 1; h < p.n; ++h) {
            const auto j = jensen_gap(x, p, h);
            gap.add(j.gap / std::max(1.0, j.lhs), tag({{"n", double(p.n)}, {"alpha", p.alpha}, {"seed", double(s)}, {"h", double(h)}}));
          }
        } catch (const CollisionError&) {
          gap.skip();
        }
      }
      for (double R : {0.4, 1.0, 2.5})
        for (int h = 1; h < p.n; ++h) {
          const auto j = jensen_gap(circle_loop(p.d, 3, R, 1), p, h);
          circ.add(std::abs(j.gap) / j.lhs, tag({{"n", double(p.n)}, {"R", R}, {"h", double(h)}}));
        }
      ++id;
    }
    out.push_back(gap.done());
    out.push_back(circ.done());
  }
  {
    Tracker t(S, "trig.margin_positive", 0.0, false);
    for (int k = 2; k <= 12; ++k)
      for (int i = 1; 0.01 * i < two_pi - 0.01; ++i) {
        const double m = trig_check(k, 0.01 * i).margin;
        t.add(m > 0.0 ? m : -1.0, tag({{"k", double(k)}, {"x", 0.01 * i}}));
      }
    out.push_back(t.done());
  }
  {
    Tracker st(S, "power_min.stationarity", 1e-10, true), beats(S, "power_min.beats_random", 1e-12, false);
    const int trials = std::max(1, o.seeds / 10);
    for (int s = 0; s < trials; ++s) {
      Rng rng = check_rng(2, s);
      std::uniform_real_distribution<double> u(0.05, 2.0);
      const int K = 1 + s % 6;
      std::vector<double> mu(static_cast<std::size_t>(K));
      for (double& m : mu) m = u(rng);
      const double beta = 0.25 + 0.25 * (s % 8);
      const auto r = constrained_power_min(mu, beta);
      st.add(r.stationarity, tag({{"seed", double(s)}}));
      for (int i = 0; i < 100; ++i) {
        std::vector<double> x(static_cast<std::size_t>(K));
        for (double& v : x) v = u(rng);
        beats.add(power_ratio(mu, x, beta) / r.value - 1.0, tag({{"seed", double(s)}, {"point", double(i)}}));
      }
    }
    out.push_back(st.done());
    out.push_back(beats.done());
  }
}

// ----- spectral

inline void run_spectral(const VerifyOptions& o, std::vector<CheckResult>& out) {
  const std::string S = "spectral";
  Tracker d0(S, "spectral.delta0_zero", 1e-12, true), d1(S, "spectral.delta1", 1e-12, true),
      strict(S, "spectral.delta_below_l2", 0.0, false), pos(S, "spectral.delta_positive", 0.0, false),
      dense(S, "spectral.dense_agreement", 1e-10, true), vec(S, "spectral.eigenvectors", 1e-10, true),
      mult(S, "spectral.multiplicities", 0.0, true), ident(S, "spectral.weight_identities", 1e-12, true);
  for (int n = 2; n <= 50; ++n) {
    for (double a : {0.5, 1.0, 2.0, 3.0}) {
      const auto s = spectrum_under_fault(n, a, o.fault);
      const std::string w = tag({{"n", double(n)}, {"alpha", a}});
      d0.add(std::abs(s.deltas[0]), w);
      d1.add(std::abs(s.deltas[1] - 1.0 / two_pi), w);
      for (std::size_t l = 1; l < s.deltas.size(); ++l) {
        pos.add(s.deltas[l] > 0.0 ? s.deltas[l] : -1.0, w + " l=" + std::to_string(l));
        if (l >= 2) {
          const double gap = l * l / two_pi - s.deltas[l];
          strict.add(gap > 0.0 ? gap : -1.0, w + " l=" + std::to_string(l));
        }
      }
      const auto dn = dense_spectrum(s);
      const auto cf = expanded_spectrum(s);
      double diff = dn.size() == cf.size() ? 0.0 : 1.0;
      for (std::size_t i = 0; i < std::min(dn.size(), cf.size()); ++i) diff = std::max(diff, std::abs(dn[i] - cf[i]));
      dense.add(diff, w);
      vec.add(eigenvector_residual(s), w);
      // pattern: [n/2]+1 distinct values, all double except l = 0 and l = n/2 for even n
      int bad = static_cast<int>(s.deltas.size()) != n / 2 + 1;
      for (int l = 0; l <= n / 2; ++l) {
        const int expect = (l == 0 || 2 * l == n) ? 1 : 2;
        const auto hits = std::count_if(dn.begin(), dn.end(), [&](double v) { return std::abs(v - s.deltas[l]) < 1e-9; });
        if (hits != expect || s.multiplicities[l] != expect) ++bad;
      }
      mult.add(bad, w);
      double sum = 0.0;
      for (std::size_t h = 0; h < s.xi_bar.size(); ++h) sum += s.mu_bar[h] * s.xi_bar[h];
      const double ct = 0.5 * std::pow(two_pi, a / 2.0 + 1.0) * s.c;
      ident.add(std::max(std::abs(sum - 1.0), std::abs(ct - s.c_tilde) / s.c_tilde), w);
    }
  }
  for (Tracker* t : {&d0, &d1, &strict, &pos, &dense, &vec, &mult, &ident}) out.push_back(t->done());
  Tracker os(S, "spectral.omega_star", 0.0, true);
  os.add(std::abs(omega_star() - 4.0 / 3.0), "omega_star");
  out.push_back(os.done());
}

// ----- chain

inline void run_chain(const VerifyOptions& o, std::vector<CheckResult>& out) {
  const std::string S = "chain";
  {
    Tracker t(S, "rayleigh.lower_bound", 1e-10, false);
    for (int n : {2, 3, 5, 8}) {
      SystemParams p{n, 2, 1.0, 0.0};
      for (int s = 0; s < o.seeds; ++s) {
        Rng rng = check_rng(300 + n, s);
        auto x = random_loop(2, 6, rng);
        t.add(rayleigh_quotient(x, p) / (pi / n) - 1.0, tag({{"n", double(n)}, {"seed", double(s)}}));
      }
    }
    out.push_back(t.done());
  }
  {
    Tracker ord(S, "chain.ordering", 1e-10, false), iff(S, "chain.equality_only_on_circles", 0.0, true);
    int id = 0;
    for (const auto& c : random_configs()) {
      SystemParams p{c.n, 2 + c.n % 2, c.alpha, 0.0};
      for (int s = 0; s < o.seeds; ++s) {
        Rng rng = check_rng(400 + id, s);
        auto x = random_loop(p.d, 5, rng);
        try {
          const auto r = bound_chain(x, p);
          const std::string w = tag({{"n", double(p.n)}, {"alpha", p.alpha}, {"seed", double(s)}});
          ord.add(std::min(r.slack_tilde, r.slack_bar), w);
          if (std::max(std::abs(r.slack_tilde), std::abs(r.slack_bar)) < 1e-9) {
            const auto d = diagnostics(x, p);
            iff.add(d.radius_fit.rms < 1e-6 && std::abs(d.winding) == 1 ? 0.0 : 1.0, w);
          } else {
            iff.add(0.0, w);
          }
        } catch (const CollisionError&) {
          ord.skip();
        }
      }
      ++id;
    }
    out.push_back(ord.done());
    out.push_back(iff.done());
  }
  {
    Tracker eq(S, "chain.circle_equality", 1e-9, true), strict(S, "chain.noisy_circle_strict", 0.0, false);
    for (const auto& c : random_configs()) {
      SystemParams p{c.n, 2, c.alpha, 0.0};
      for (double R : {0.5, 1.0, 1.7})
        for (int m : {1, -1}) {
          auto x = circle_loop(2, 4, R, m);
          const auto r = bound_chain(x, p);
          const std::string w = tag({{"n", double(p.n)}, {"alpha", p.alpha}, {"R", R}, {"m", double(m)}});
          eq.add(std::max(std::abs(r.slack_tilde), std::abs(r.slack_bar)) / r.A, w);
          Rng rng = check_rng(500 + p.n, static_cast<int>(R * 10) + m);
          add_noise(x, rng, 0.02);
          const auto rn = bound_chain(x, p);
          const double s = std::max(rn.slack_tilde, rn.slack_bar) - 1e-9;
          strict.add(s > 0.0 ? s : -1.0, w);
        }
    }
    out.push_back(eq.done());
    out.push_back(strict.done());
  }
}

}  // namespace detail

inline VerifyReport run_verify(Suite suite, const VerifyOptions& o) {
  if (o.seeds < 1) throw ConfigError("verify: seeds must be >= 1");
  VerifyReport r;
  if (suite == Suite::inequalities || suite == Suite::all) detail::run_inequalities(o, r.checks);
  if (suite == Suite::spectral || suite == Suite::all) detail::run_spectral(o, r.checks);
  if (suite == Suite::chain || suite == Suite::all) detail::run_chain(o, r.checks);
  return r;
}

}  // namespace choreo
