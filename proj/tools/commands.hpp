#pragma once

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "choreo/choreo.hpp"

namespace choreo::cli {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_escape = 2;

struct Streams {
  std::ostream& out;
  std::ostream& err;
};

inline std::pair<int, int> parse_plane(const std::string& s, int dim) {
  int a = 0, b = 1;
  char comma = 0;
  std::istringstream in(s);
  if (!(in >> a >> comma >> b) || comma != ',' || !in.eof()) throw ConfigError("plane must look like 0,1");
  if (a < 0 || b < 0 || a >= dim || b >= dim || a == b) throw ConfigError("plane axes out of range");
  return {a, b};
}

inline bool scale_monotone(const std::vector<IterationRecord>& h) {
  for (std::size_t i = 1; i < h.size(); ++i)
    if (h[i].scale < h[i - 1].scale * (1.0 - 1e-12)) return false;
  return true;
}

// ---------------------------------------------------------------------------------------------
// minimize

struct MinimizeArgs {
  SystemParams params;
  DescentConfig descent;
  std::optional<int> winding;
  std::optional<double> radius;
  double noise = 0.05;
  std::uint64_t seed = 0;
  int starts = 1;
  std::string out_dir;
  std::string svg;
  std::string plane = "0,1";
  int samples = 256;
};

inline Json resolved_config(const MinimizeArgs& a) {
  Json init{{"kind", a.winding ? "circle" : "auto"}, {"noise", a.noise}, {"seed", a.seed}, {"starts", a.starts}};
  init["winding"] = opt_json(a.winding);
  init["radius"] = opt_json(a.radius);
  return Json{{"command", "minimize"},
              {"params", to_json(a.params)},
              {"descent", to_json(a.descent)},
              {"init", init},
              {"output", Json{{"samples", a.samples}, {"plane", a.plane}, {"svg", !a.svg.empty()}}}};
}

inline StartSpec start_for(const MinimizeArgs& a, const RegimeReport& rep, std::uint64_t seed) {
  StartSpec s;
  s.seed = seed;
  s.noise = a.noise;
  if (!a.winding) {
    s.kind = StartSpec::Kind::loop;
    s.loop = suggest_init(rep, a.params.d, a.noise, seed, a.descent.cutoff);
    return s;
  }
  s.kind = StartSpec::Kind::circle;
  s.winding = *a.winding;
  s.radius = a.radius ? *a.radius : circle_optimum(a.params.n, a.params.alpha, a.params.omega, *a.winding).radius;
  return s;
}

inline int run_minimize(const MinimizeArgs& a, Streams io) {
  a.params.validate();
  a.descent.validate();
  if (a.starts < 1) throw ConfigError("--starts must be >= 1");
  const auto [px, py] = parse_plane(a.plane, a.params.d);
  const Json config = resolved_config(a);
  const auto rep = classify(a.params.n, a.params.alpha, a.params.omega);

  std::vector<StartSpec> starts;
  for (int i = 0; i < a.starts; ++i) starts.push_back(start_for(a, rep, a.seed + static_cast<std::uint64_t>(i)));
  const auto ms = multistart(a.params, a.descent, starts);
  const auto& best = ms.table[ms.best];
  if (!best.error.empty()) throw Error(best.error);
  const auto& r = best.result;

  Json summary{{"config", config}, {"regime", to_string(rep.regime)}, {"best_seed", best.seed}, {"result", to_json(r)}};
  Json table = Json::array();
  for (const auto& row : ms.table) {
    Json e{{"start", row.start}, {"seed", row.seed}};
    if (!row.error.empty()) {
      e["error"] = row.error;
    } else {
      e["action"] = row.result.action.total;
      e["stop"] = to_string(row.result.stop);
      e["winding"] = row.result.diagnostics.winding;
      e["planarity"] = row.result.diagnostics.planarity;
    }
    table.push_back(e);
  }
  summary["starts"] = table;
  if (r.escaped_to_infinity)
    summary["escape"] = Json{{"initial_scale", r.initial_scale}, {"final_scale", r.final_scale}, {"iters", r.iters},
                             {"monotone", scale_monotone(r.history)}};

  if (!a.out_dir.empty()) {
    const std::filesystem::path dir(a.out_dir);
    Json orbit = orbit_to_json(r.loop, a.params);
    orbit["config"] = config;
    write_text(dir / "orbit.json", orbit.dump(2) + "\n");
    write_text(dir / "history.csv", history_csv(r.history, config));
    write_text(dir / "samples.csv", samples_csv(r.loop, a.params, a.samples, config));
    write_text(dir / "manifest.json", summary.dump(2) + "\n");
  }
  if (!a.svg.empty()) {
    SvgOptions o;
    o.plane_x = px;
    o.plane_y = py;
    write_text(a.svg, orbits_svg({{r.loop, a.params, "orbit", true}}, o, config));
  }
  io.out << summary.dump(2) << "\n";
  if (r.escaped_to_infinity) {
    io.err << "escape: gyration radius " << num(r.initial_scale) << " -> " << num(r.final_scale) << " after " << r.iters
           << " iterations (" << (scale_monotone(r.history) ? "monotone" : "non-monotone")
           << "); no minimizer is attained\n";
    return exit_escape;
  }
  if (!r.converged) {
    io.err << "minimize: stopped without convergence (" << to_string(r.stop) << ", grad_norm " << num(r.grad_norm)
           << ")\n";
    return exit_error;
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------------------------
// mpa

inline FourierLoop coefficient_list(const Json& j, int dim, int cutoff, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of coefficients");
  FourierLoop x(dim, cutoff);
  for (const auto& e : j) {
    require_keys(e, {"part", "k", "i", "value"}, where);
    std::string part;
    int k = 0, i = -1;
    double v = 0.0;
    read_field(e, "part", part, where);
    read_field(e, "k", k, where);
    read_field(e, "i", i, where);
    read_field(e, "value", v, where);
    if (i < 0 || i >= dim) throw ConfigError(where + ": component out of range");
    if (part == "mean") {
      x.mean(i) = v;
      continue;
    }
    if (k < 1 || k > cutoff) throw ConfigError(where + ": harmonic out of range");
    if (part == "cos")
      x.cos(k, i) = v;
    else if (part == "sin")
      x.sin(k, i) = v;
    else
      throw ConfigError(where + ": part must be mean, cos or sin");
  }
  return x;
}

inline FourierLoop endpoint_from_json(const Json& j, const SystemParams& p, int cutoff, const std::filesystem::path& base,
                                      const std::string& where) {
  require_keys(j, {"circle", "coefficients", "orbit"}, where);
  if (j.size() != 1) throw ConfigError(where + ": give exactly one of circle, coefficients, orbit");
  if (j.contains("circle")) {
    const auto& c = j.at("circle");
    require_keys(c, {"winding", "radius"}, where + ".circle");
    int w = 0;
    read_field(c, "winding", w, where);
    if (w == 0) throw ConfigError(where + ": circle needs a nonzero winding");
    double R = circle_optimum(p.n, p.alpha, p.omega, w).radius;
    read_field(c, "radius", R, where);
    return circle_loop(p.d, cutoff, R, w);
  }
  if (j.contains("coefficients")) return coefficient_list(j.at("coefficients"), p.d, cutoff, where);
  std::string file;
  read_field(j, "orbit", file, where);
  std::filesystem::path path(file);
  if (path.is_relative()) path = base / path;
  const auto o = orbit_from_json(read_json_file(path));
  if (o.params.d != p.d) throw ConfigError(where + ": orbit dimension differs from params.d");
  return o.loop.with_cutoff(cutoff);
}

inline int run_mpa(const std::string& config_path, const std::string& out_override, Streams io) {
  const std::filesystem::path cfg_file(config_path);
  const Json j = read_json_file(cfg_file);
  require_keys(j, {"params", "mountain_pass", "endpoints", "lift", "output"}, "mpa config");
  if (!j.contains("params") || !j.contains("endpoints")) throw ConfigError("mpa config: params and endpoints are required");
  const SystemParams p = params_from_json(j.at("params"));
  MountainPassConfig mc = j.contains("mountain_pass") ? mountain_pass_config_from_json(j.at("mountain_pass")) : MountainPassConfig{};
  const auto base = cfg_file.has_parent_path() ? cfg_file.parent_path() : std::filesystem::path(".");
  const auto& ends = j.at("endpoints");
  if (!ends.is_array() || ends.size() != 2) throw ConfigError("mpa config: endpoints must hold two entries");
  const FourierLoop a = endpoint_from_json(ends[0], p, mc.cutoff, base, "endpoints[0]");
  const FourierLoop b = endpoint_from_json(ends[1], p, mc.cutoff, base, "endpoints[1]");
  if (j.contains("lift")) mc.lift = coefficient_list(j.at("lift"), p.d, mc.cutoff, "lift");

  std::string dir = out_override;
  std::string plane = "0,1";
  int samples = 256;
  bool svg = true;
  if (j.contains("output")) {
    const auto& o = j.at("output");
    require_keys(o, {"dir", "plane", "samples", "svg"}, "output");
    if (dir.empty()) read_field(o, "dir", dir, "output");
    read_field(o, "plane", plane, "output");
    read_field(o, "samples", samples, "output");
    read_field(o, "svg", svg, "output");
  }
  const auto [px, py] = parse_plane(plane, p.d);

  Json config{{"command", "mpa"},
              {"params", to_json(p)},
              {"mountain_pass", to_json(mc)},
              {"endpoints", Json::array({orbit_to_json(a, p, false), orbit_to_json(b, p, false)})},
              {"output", Json{{"plane", plane}, {"samples", samples}, {"svg", svg}}}};

  const auto r = mountain_pass(a, b, p, mc);
  Json summary = to_json(r, p);
  summary["endpoint_actions"] = Json::array({rotating_action(a, p).total, rotating_action(b, p).total});
  if (p.d == 3) {
    const auto e = eight_check(r.loop);
    summary["eight_check"] = Json{{"sup_out_of_plane", e.sup_out_of_plane}, {"sign_changes", e.sign_changes},
                                  {"lobe_area_left", e.lobe_area_left},     {"lobe_area_right", e.lobe_area_right},
                                  {"winding", e.winding},                   {"is_eight", e.is_eight}};
  }
  summary["config"] = config;

  if (!dir.empty()) {
    const std::filesystem::path d(dir);
    write_text(d / "saddle.json", summary.dump(2) + "\n");
    Json initial{{"config", config}, {"nodes", r.path_history.empty() ? Json::array() : path_to_json(r.path_history.front(), p)}};
    Json final_path{{"config", config}, {"nodes", path_to_json(r.path, p)}};
    write_text(d / "path_initial.json", initial.dump(2) + "\n");
    write_text(d / "path_final.json", final_path.dump(2) + "\n");
    write_text(d / "saddle_samples.csv", samples_csv(r.loop, p, samples, config));
    std::string prof = csv_config_line(config) + "node,action\n";
    for (const auto& e : path_energy_profile(r.path).entries) prof += std::to_string(e.node) + "," + num(e.action) + "\n";
    write_text(d / "profile.csv", prof);
    if (svg) {
      SvgOptions o;
      o.plane_x = px;
      o.plane_y = py;
      write_text(d / "mpa.svg",
                 orbits_svg({{a, p, "endpoint A", false}, {b, p, "endpoint B", false}, {r.loop, p, "saddle", true}}, o, config));
    }
  }
  io.out << summary.dump(2) << "\n";
  if (!r.converged) {
    io.err << "mpa: saddle search did not converge (grad_norm " << num(r.grad_norm) << ")\n";
    return exit_error;
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------------------------
// entry point

inline int run(const std::vector<std::string>& args, Streams io) {
  CLI::App app{"Choreography action minimizer, classifier and saddle finder"};
  app.name("choreo");
  app.require_subcommand(1);

  MinimizeArgs ma;
  std::string metric = "sobolev", symmetry = "trivial";
  auto* mini = app.add_subcommand("minimize", "Steepest descent on the choreography action");
  mini->add_option("--n", ma.params.n, "number of bodies")->required();
  mini->add_option("--alpha", ma.params.alpha, "potential exponent")->capture_default_str();
  mini->add_option("--omega", ma.params.omega, "frame angular velocity")->capture_default_str();
  mini->add_option("--dim", ma.params.d, "space dimension")->capture_default_str();
  mini->add_option("--harmonics", ma.descent.cutoff, "Fourier cutoff K")->capture_default_str();
  mini->add_option("--grid", ma.descent.grid, "quadrature points (0 = default)")->capture_default_str();
  mini->add_option("--seed", ma.seed, "noise seed of the first start")->capture_default_str();
  mini->add_option("--winding", ma.winding, "start from a circle of this winding (default: classifier start)");
  mini->add_option("--radius", ma.radius, "start radius (default: best circle of that winding)");
  mini->add_option("--noise", ma.noise, "uniform noise amplitude on every coefficient")->capture_default_str();
  mini->add_option("--starts", ma.starts, "independent starts with consecutive seeds")->capture_default_str();
  mini->add_option("--max-iters", ma.descent.max_iters)->capture_default_str();
  mini->add_option("--grad-tol", ma.descent.grad_tol)->capture_default_str();
  mini->add_option("--metric", metric, "sobolev or euclidean")->capture_default_str();
  mini->add_option("--symmetry", symmetry, "trivial or eight3d")->capture_default_str();
  mini->add_flag("--pin-mean", ma.descent.pin_mean, "fix the mean at zero");
  mini->add_option("--out", ma.out_dir, "directory for orbit.json, history.csv, samples.csv, manifest.json");
  mini->add_option("--svg", ma.svg, "write an SVG of all bodies here");
  mini->add_option("--plane", ma.plane, "projection axes for the SVG")->capture_default_str();
  mini->add_option("--samples", ma.samples, "samples per period in samples.csv")->capture_default_str();

  int cn = 3;
  double calpha = 1.0, comega = 0.0;
  auto* cls = app.add_subcommand("classify", "Regime report for (n, alpha, omega)");
  cls->add_option("--n", cn)->required();
  cls->add_option("--alpha", calpha)->capture_default_str();
  cls->add_option("--omega", comega)->capture_default_str();

  int sn = 3, sk = 1;
  double salpha = 1.0;
  bool sdense = false;
  auto* spec = app.add_subcommand("spectrum", "Weights and eigenvalues of the circulant operator");
  spec->add_option("--n", sn)->required();
  spec->add_option("--alpha", salpha)->capture_default_str();
  spec->add_option("--variant", sk, "coprime multiplier k")->capture_default_str();
  spec->add_flag("--dense", sdense, "also report the dense-matrix eigenvalues");

  std::string suite = "all", fault = "none", report;
  int seeds = 200;
  auto* ver = app.add_subcommand("verify", "Property suites for the inequalities and the spectrum");
  ver->add_option("--suite", suite, "inequalities, spectral, chain or all")->capture_default_str();
  ver->add_option("--seeds", seeds, "random loops per configuration")->capture_default_str();
  ver->add_option("--inject-fault", fault, "corrupt an input on purpose (flip-delta1)")->capture_default_str();
  ver->add_option("--report", report, "write the JSON report here");

  std::string mpa_config, mpa_out;
  auto* mpa = app.add_subcommand("mpa", "Mountain-pass saddle search");
  mpa->add_option("--config", mpa_config, "JSON run config")->required();
  mpa->add_option("--out", mpa_out, "output directory (overrides output.dir)");

  std::vector<const char*> argv{"choreo"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return exit_ok;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << "\n\n";
    const CLI::App* sub = nullptr;
    for (auto* s : app.get_subcommands()) sub = s;
    io.err << (sub ? sub->help() : app.help());
    return exit_error;
  }

  try {
    if (*mini) {
      ma.descent.metric = metric_from_string(metric);
      ma.descent.symmetry = symmetry_from_string(symmetry);
      ma.descent.seed = ma.seed;
      return run_minimize(ma, io);
    }
    if (*cls) {
      io.out << to_json(classify(cn, calpha, comega)).dump(2) << "\n";
      return exit_ok;
    }
    if (*spec) {
      const auto s = circulant_spectrum(sn, salpha, sk);
      Json j = to_json(s);
      if (sdense) {
        const auto dn = dense_spectrum(s);
        const auto cf = expanded_spectrum(s);
        double diff = 0.0;
        for (std::size_t i = 0; i < dn.size(); ++i) diff = std::max(diff, std::abs(dn[i] - cf[i]));
        j["dense_eigenvalues"] = dn;
        j["dense_max_difference"] = diff;
      }
      io.out << j.dump(2) << "\n";
      return exit_ok;
    }
    if (*ver) {
      VerifyOptions o;
      o.seeds = seeds;
      o.fault = fault_from_string(fault);
      const auto r = run_verify(suite_from_string(suite), o);
      for (const auto& c : r.checks) {
        io.out << (c.passed ? "PASS " : "FAIL ") << c.name << "  samples=" << c.samples << " worst=" << num(c.worst)
               << " tol=" << num(c.tolerance);
        if (c.skipped) io.out << " skipped=" << c.skipped;
        if (!c.passed) io.out << "  [" << c.detail << "]";
        io.out << "\n";
      }
      io.out << (r.passed() ? "all checks passed" : "FAILED") << "\n";
      if (!report.empty()) write_text(report, to_json(r).dump(2) + "\n");
      return r.passed() ? exit_ok : exit_error;
    }
    if (*mpa) return run_mpa(mpa_config, mpa_out, io);
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return exit_error;
  }
  return exit_error;
}

}  // namespace choreo::cli
