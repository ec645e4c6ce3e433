// Acceptance run: one PASS/FAIL line per criterion.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"

using namespace choreo;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string title;
  double limit_s;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string g(double v) { return fmt("%.6g", v); }

std::string frac(int ok, int total) { return std::to_string(ok) + "/" + std::to_string(total); }

bool at_least_95(int ok, int total) { return ok * 100 >= 95 * total; }

// ----- 1

Outcome spectral_exactness() {
  VerifyOptions o;
  o.seeds = 1;
  const auto r = run_verify(Suite::spectral, o);
  Outcome out{r.passed(), ""};
  for (const auto& c : r.checks) {
    if (c.name == "spectral.delta1" || c.name == "spectral.dense_agreement")
      out.detail += c.name + " worst " + g(c.worst) + "; ";
    if (!c.passed) out.detail += "FAILED " + c.name + " [" + c.detail + "]; ";
  }
  out.detail += std::to_string(r.checks.size()) + " checks over n=2..50, alpha in {0.5,1,2,3}";
  return out;
}

// ----- 2

Outcome kepler_anchor() {
  const auto c = kepler_circle(1.0);
  bool ok = std::abs(c.radius - 1.0) < 1e-10 && std::abs(c.l2 - two_pi) < 1e-10;
  double worst_r = 0.0, worst_a = 0.0;
  int conv = 0;
  DescentConfig cfg;
  cfg.cutoff = 8;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    FourierLoop q = circle_loop(2, 8, 1.3, 1);
    Rng rng(seed);
    add_noise(q, rng, 0.05);
    const auto r = minimize_kepler(1.0, q, cfg);
    conv += r.converged;
    worst_r = std::max(worst_r, std::abs(r.diagnostics.radius_fit.radius - 1.0));
    worst_a = std::max(worst_a, std::abs(r.action.total - 3.0 * pi));
  }
  ok = ok && conv == 10 && worst_r < 1e-4 && worst_a < 1e-5;
  return {ok, "closed form R=" + g(c.radius) + " int|q|^2-2pi=" + g(c.l2 - two_pi) + "; descent " + frac(conv, 10) +
                  " converged, max|R-1|=" + g(worst_r) + ", max|A-3pi|=" + g(worst_a)};
}

// ----- 3

Outcome inertial_circles() {
  int total = 0, good = 0;
  double worst_r = 0.0, worst_a = 0.0, worst_slack = 0.0, worst_plan = 0.0;
  std::string first_bad;
  for (int n : {2, 3, 4, 5, 8})
    for (double a : {1.0, 2.0}) {
      const SystemParams p{n, 3, a, 0.0};
      const double c_tilde = circle_potential_constant(n, a);
      const double R_star = std::pow(a * c_tilde / two_pi, 1.0 / (a + 2.0));
      const auto opt = circle_optimum(n, a, 0.0, 1);
      DescentConfig cfg;
      for (std::uint64_t seed = 0; seed < 10; ++seed) {
        ++total;
        const auto r = minimize(p, init_circle(p, 1, 1.0, 0.1, seed, cfg.cutoff), cfg);
        const auto& d = r.diagnostics;
        const auto ch = bound_chain(r.loop, p);
        const double er = std::abs(d.radius_fit.radius - R_star);
        const double ea = std::abs(r.action.total - opt.action) / opt.action;
        const double sl = std::max(std::abs(ch.slack_tilde), std::abs(ch.slack_bar));
        worst_r = std::max(worst_r, er);
        worst_a = std::max(worst_a, ea);
        worst_slack = std::max(worst_slack, sl);
        worst_plan = std::max(worst_plan, d.planarity);
        const bool ok = r.converged && r.grad_norm < 1e-8 && std::abs(d.winding) == 1 && d.radius_fit.rms < 1e-6 &&
                        d.planarity < 1e-8 && er < 1e-4 && ea < 1e-6 && sl < 1e-8;
        good += ok;
        if (!ok && first_bad.empty()) first_bad = " first miss n=" + std::to_string(n) + " alpha=" + g(a) + " seed=" + std::to_string(seed);
      }
    }
  return {good == total, frac(good, total) + " runs; max|R-R*|=" + g(worst_r) + " max rel action err=" + g(worst_a) +
                             " max chain slack=" + g(worst_slack) + " max planarity=" + g(worst_plan) + first_bad};
}

// ----- 4

struct CaseLine {
  std::string name;
  int ok = 0, total = 0;
  bool classify_ok = false;
  std::string note;
};

CaseLine circle_case(int n, double omega, int expect_w, double expect_period) {
  CaseLine c;
  c.name = "(" + std::to_string(n) + ",1," + g(omega) + ")";
  const auto rep = classify(n, 1.0, omega);
  c.classify_ok = predicts_circle(rep.regime) && rep.predicted_winding == expect_w && rep.predicted_period &&
                  std::abs(*rep.predicted_period - expect_period) < 1e-12;
  const SystemParams p{n, 3, 1.0, omega};
  DescentConfig cfg;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ++c.total;
    const auto r = minimize(p, suggest_init(rep, 3, 0.05, seed, cfg.cutoff), cfg);
    const auto& d = r.diagnostics;
    const double er = std::abs(d.radius_fit.radius - rep.predicted_radius.value_or(0.0));
    worst = std::max(worst, er);
    c.ok += r.converged && d.winding == expect_w && d.radius_fit.rms < 1e-6 && d.planarity < 1e-8 && er < 1e-4 &&
            std::abs(two_pi / std::abs(d.winding) - expect_period) < 1e-12;
  }
  c.note = "max|R-R_pred|=" + g(worst);
  return c;
}

CaseLine tie_case() {
  CaseLine c;
  c.name = "(3,1,1.5) tie";
  const auto rep = classify(3, 1.0, 1.5);
  auto has = [&](int w) { return std::find(rep.tied_windings.begin(), rep.tied_windings.end(), w) != rep.tied_windings.end(); };
  c.classify_ok = rep.tied_windings.size() == 2 && has(-1) && has(-2);
  const SystemParams p{3, 3, 1.0, 1.5};
  DescentConfig cfg;
  double worst_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ++c.total;
    MinimizeResult r[2];
    bool ok = true;
    for (int i = 0; i < 2; ++i) {
      const int w = -1 - i;
      r[i] = minimize(p, init_circle(p, w, circle_optimum(3, 1.0, 1.5, w).radius, 0.05, seed, cfg.cutoff), cfg);
      const auto& d = r[i].diagnostics;
      ok = ok && r[i].converged && d.winding == w && d.radius_fit.rms < 1e-6 && d.planarity < 1e-8;
    }
    const double gap = std::abs(r[0].action.total - r[1].action.total);
    worst_gap = std::max(worst_gap, gap);
    c.ok += ok && gap < 1e-8 * r[0].action.total;
  }
  c.note = "periods 2pi and pi, max action gap=" + g(worst_gap);
  return c;
}

CaseLine escape_case(int n, double omega) {
  CaseLine c;
  c.name = "(" + std::to_string(n) + ",1," + g(omega) + ") escape";
  c.classify_ok = predicts_escape(classify(n, 1.0, omega).regime);
  for (int seed = 0; seed < 20; ++seed) {
    ++c.total;
    std::ostringstream out, err;
    const int code = cli::run({"minimize", "--n", std::to_string(n), "--alpha", "1", "--omega", g(omega), "--seed",
                               std::to_string(seed)},
                              {out, err});
    bool monotone = false;
    try {
      monotone = Json::parse(out.str())["escape"]["monotone"].get<bool>();
    } catch (const std::exception&) {
    }
    c.ok += code == cli::exit_escape && monotone;
  }
  c.note = "exit 2 with monotone scale growth";
  return c;
}

CaseLine cluster_case() {
  CaseLine c;
  c.name = "(6,1,1.8) clusters";
  const auto rep = classify(6, 1.0, 1.8);
  c.classify_ok = rep.regime == Regime::nonrigid_winding_k && rep.cluster_shape &&
                  *rep.cluster_shape == std::make_pair(3, 2);
  const SystemParams p{6, 3, 1.0, 1.8};
  DescentConfig cfg;
  double min_rms = 1e300;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ++c.total;
    const auto r = minimize(p, suggest_init(rep, 3, 0.05, seed, cfg.cutoff), cfg);
    const auto& d = r.diagnostics;
    bool parts = r.clusters && r.clusters->j == 3 && r.clusters->matches_residue_partition;
    if (parts) {
      const auto& a = r.clusters->assignment;
      for (int i = 0; i < 3; ++i) parts = parts && a[i] == a[i + 3] && a[i] != a[(i + 1) % 3];
    }
    min_rms = std::min(min_rms, d.radius_fit.rms);
    c.ok += r.converged && std::abs(d.winding) == 2 && d.planarity < 1e-8 && d.radius_fit.rms > 1e-3 && parts;
  }
  c.note = "partition {0,3},{1,4},{2,5}, min circle-fit rms=" + g(min_rms);
  return c;
}

Outcome rotating_regimes() {
  std::vector<CaseLine> cases{circle_case(3, 0.5, -1, two_pi), tie_case(), circle_case(5, 2.1, -2, pi),
                              escape_case(5, 3.0), escape_case(6, 2.0), cluster_case()};
  Outcome o{true, ""};
  for (const auto& c : cases) {
    const bool pass = c.classify_ok && at_least_95(c.ok, c.total);
    o.pass = o.pass && pass;
    o.detail += "\n      " + std::string(pass ? "ok  " : "MISS") + " " + c.name + ": classify " +
                (c.classify_ok ? "agrees" : "DISAGREES") + ", minimize " + frac(c.ok, c.total) + "; " + c.note;
  }
  return o;
}

// ----- 5

Outcome min2_certificates() {
  const bool star = omega_star() == 4.0 / 3.0;
  int ok = 0, total = 0;
  std::string misses;
  for (double a : {0.5, 1.0, 2.0}) {
    for (int n = 3; n <= 9; ++n) {
      for (int k = 2; k <= n - 1; ++k) {
        if (std::gcd(k, n) != 1) continue;
        if (n == 3 && k != 2) continue;
        ++total;
        const auto r = min2_check(n, a, k);
        if (r.epsilon == 0.5) {
          ++ok;
        } else if (misses.size() < 160) {
          misses += " (n=" + std::to_string(n) + ",k=" + std::to_string(k) + ",a=" + g(a) + ": eps=" + fmt("%.4f", r.epsilon) + ")";
        }
      }
    }
  }
  return {star && ok == total, std::string("omega*=4/3 ") + (star ? "exact" : "WRONG") + "; eps=1/2 in " + frac(ok, total) +
                                   " cases" + (misses.empty() ? "" : "; e.g." + misses)};
}

// ----- 6

Outcome inequality_suite() {
  VerifyOptions o;
  o.seeds = 1000;
  auto r = run_verify(Suite::inequalities, o);
  const auto chain = run_verify(Suite::chain, o);
  r.checks.insert(r.checks.end(), chain.checks.begin(), chain.checks.end());
  Outcome out{r.passed(), std::to_string(r.checks.size()) + " checks, 1000 random loops per configuration"};
  long samples = 0, skipped = 0;
  for (const auto& c : r.checks) {
    samples += c.samples;
    skipped += c.skipped;
    if (!c.passed) out.detail += "; FAILED " + c.name + " [" + c.detail + "]";
  }
  out.detail += ", " + std::to_string(samples) + " samples, " + std::to_string(skipped) + " near-collision loops skipped";
  return out;
}

// ----- 7

constexpr double saddle_regression = 5.117783865651427;  // n=3, omega=1.5, K=16
constexpr double eight_regression = 8.123975492102293;   // n=3, omega=0, K=24

Outcome mountain_pass_runs() {
  std::string detail;
  bool pass = true;
  {
    const SystemParams p{3, 3, 1.0, 1.5};
    MountainPassConfig c;
    c.cutoff = 16;
    const auto opt = circle_optimum(3, 1.0, 1.5, -1);
    const auto a = circle_loop(3, 16, opt.radius, -1), b = circle_loop(3, 16, opt.radius, -2);
    FourierLoop lift(3, 16);
    lift.cos(1, 2) = 0.5;
    lift.sin(2, 2) = 0.35;
    c.lift = lift;
    const auto r = mountain_pass(a, b, p, c);
    const double ea = rotating_action(a, p).total, eb = rotating_action(b, p).total;
    const auto d = diagnostics(r.loop, p);
    const bool ok = r.converged && r.grad_norm < 1e-6 && r.action > std::max(ea, eb) && r.min_separation > 0.05 &&
                    d.radius_fit.rms > 1e-2 && r.newton_residual < 1e3 * c.saddle_tol &&
                    std::abs(r.action - saddle_regression) < 1e-8 * saddle_regression && r.probe &&
                    r.probe->tangent_curvature < 0.0;
    pass = pass && ok;
    detail += "\n      " + std::string(ok ? "ok  " : "MISS") + " omega=1.5 saddle: action " + fmt("%.10f", r.action) +
              " (endpoints " + fmt("%.10f", ea) + "), grad " + g(r.grad_norm) + ", residual " + g(r.newton_residual) +
              ", min sep " + g(r.min_separation) + ", circle-fit rms " + g(d.radius_fit.rms) + ", tangent curvature " +
              g(r.probe ? r.probe->tangent_curvature : 0.0) + ", min transverse " + g(r.probe ? r.probe->min_transverse : 0.0);
  }
  {
    const int K = 24;
    const SystemParams p{3, 3, 1.0, 0.0};
    const double R = std::pow(3.0, -1.0 / 6.0);
    FourierLoop a(3, K), b(3, K), lift(3, K);
    a.sin(1, 1) = b.sin(1, 1) = R;
    a.cos(1, 2) = R;
    b.cos(1, 2) = -R;
    lift.sin(2, 0) = 0.5;
    MountainPassConfig c;
    c.cutoff = K;
    c.symmetry = SymmetryGroup::eight3d;
    c.lift = lift;
    const auto r = mountain_pass(a, b, p, c);
    const auto e = eight_check(r.loop);
    const bool ok = r.converged && r.grad_norm < 1e-6 && e.sup_out_of_plane < 1e-3 && e.is_eight && e.sign_changes == 2 &&
                    e.winding == 0 && r.action > rotating_action(a, p).total &&
                    std::abs(r.action - eight_regression) < 1e-8 * eight_regression;
    pass = pass && ok;
    detail += "\n      " + std::string(ok ? "ok  " : "MISS") + " eight: action " + fmt("%.10f", r.action) + ", grad " +
              g(r.grad_norm) + ", residual " + g(r.newton_residual) + ", sup|x3| " + g(e.sup_out_of_plane) +
              ", sign changes " + std::to_string(e.sign_changes) + ", lobe areas " + g(e.lobe_area_left) + "/" +
              g(e.lobe_area_right) + ", winding " + std::to_string(e.winding);
  }
  return {pass, detail};
}

// ----- 8

Outcome nonplanar_smoke() {
  const SystemParams p{12, 3, 1.0, 6.55};
  const auto rep = classify(12, 1.0, 6.55);
  DescentConfig cfg;
  std::vector<StartSpec> starts;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    StartSpec s;
    s.kind = StartSpec::Kind::loop;
    s.seed = seed;
    s.loop = suggest_init(rep, 3, 0.05, seed, cfg.cutoff);
    starts.push_back(s);
  }
  const auto ms = multistart(p, cfg, starts);
  const auto& best = ms.table[ms.best];
  if (!best.error.empty()) return {false, "best start failed: " + best.error};
  const auto& r = best.result;
  int conv = 0;
  for (const auto& row : ms.table) conv += row.error.empty() && row.result.converged;
  const double ratio = r.diagnostics.planarity;
  return {r.converged && ratio > 0.05,
          "best action " + fmt("%.10f", r.action.total) + " (winding " + std::to_string(r.diagnostics.winding) + ", " +
              frac(conv, 10) + " converged); planarity lambda3/lambda1 = " + g(ratio) + " (threshold 0.05), extent ratio sqrt = " +
              g(std::sqrt(std::max(0.0, ratio))) + "; empirical"};
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "spectral exactness", 5, spectral_exactness},
      {2, "Kepler anchor", 10, kepler_anchor},
      {3, "inertial n-body circles", 300, inertial_circles},
      {4, "rotating-frame regimes", 900, rotating_regimes},
      {5, "min2 / omega* certificates", 1, min2_certificates},
      {6, "inequality property suite", 120, inequality_suite},
      {7, "mountain pass saddles", 600, mountain_pass_runs},
      {8, "non-planar smoke run (n=12, omega=6.55, d=3)", 1e9, nonplanar_smoke},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.limit_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::cout << "[" << (pass ? "PASS" : "FAIL") << "] " << c.id << ". " << c.title << " (" << fmt("%.2f", secs) << " s";
    if (c.limit_s < 1e8) std::cout << ", limit " << g(c.limit_s) << " s" << (in_time ? "" : " EXCEEDED");
    std::cout << "): " << o.detail << "\n" << std::flush;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << "\n";
  return failed ? 1 : 0;
}
