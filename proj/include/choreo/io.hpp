#pragma once

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "choreo/bounds.hpp"
#include "choreo/diagnostics.hpp"
#include "choreo/mountain_pass.hpp"
#include "choreo/optimize.hpp"
#include "choreo/spectral.hpp"

namespace choreo {

using Json = nlohmann::ordered_json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------------------------
// Strict object reading

/// Throws ConfigError if `j` is not an object or carries a key outside `allowed`.
inline void require_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, v] : j.items())
    if (!ok.count(k)) throw ConfigError(where + ": unknown field '" + k + "'");
}

template <class T>
void read_field(const Json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(where + ": bad value for '" + key + "'");
  }
}

// ---------------------------------------------------------------------------------------------
// Loops and parameters

inline Json to_json(const SystemParams& p) { return Json{{"n", p.n}, {"d", p.d}, {"alpha", p.alpha}, {"omega", p.omega}}; }

inline SystemParams params_from_json(const Json& j) {
  require_keys(j, {"n", "d", "alpha", "omega"}, "params");
  SystemParams p;
  read_field(j, "n", p.n, "params");
  read_field(j, "d", p.d, "params");
  read_field(j, "alpha", p.alpha, "params");
  read_field(j, "omega", p.omega, "params");
  p.validate();
  return p;
}

inline Json to_json(const CircleFit& f) { return Json{{"center", f.center}, {"radius", f.radius}, {"rms", f.rms}}; }

inline Json to_json(const LoopDiagnostics& d) {
  return Json{{"winding", d.winding},
              {"winding_residual", d.winding_residual},
              {"degenerate", d.degenerate},
              {"planarity", d.planarity},
              {"min_separation", d.min_separation},
              {"radius_fit", to_json(d.radius_fit)}};
}

/// Coefficient tables: "cos"[k-1][i] = a_k component i.
inline Json loop_coefficients(const FourierLoop& x) {
  Json mean = Json::array(), cs = Json::array(), sn = Json::array();
  for (int i = 0; i < x.dim(); ++i) mean.push_back(x.mean(i));
  for (int k = 1; k <= x.cutoff(); ++k) {
    Json a = Json::array(), b = Json::array();
    for (int i = 0; i < x.dim(); ++i) {
      a.push_back(x.cos(k, i));
      b.push_back(x.sin(k, i));
    }
    cs.push_back(std::move(a));
    sn.push_back(std::move(b));
  }
  return Json{{"mean", mean}, {"cos", cs}, {"sin", sn}};
}

inline Json orbit_to_json(const FourierLoop& x, const SystemParams& p, bool with_diagnostics = true) {
  Json j{{"params", to_json(p)}, {"cutoff", x.cutoff()}};
  const Json c = loop_coefficients(x);
  j["mean"] = c["mean"];
  j["cos"] = c["cos"];
  j["sin"] = c["sin"];
  if (with_diagnostics) {
    try {
      j["diagnostics"] = to_json(diagnostics(x, p));
    } catch (const std::exception& e) {
      j["diagnostics"] = Json{{"error", e.what()}};
    }
  }
  return j;
}

struct Orbit {
  SystemParams params;
  FourierLoop loop;
};

inline Orbit orbit_from_json(const Json& j) {
  require_keys(j, {"params", "cutoff", "mean", "cos", "sin", "diagnostics", "config"}, "orbit");
  if (!j.contains("params") || !j.contains("cutoff") || !j.contains("mean") || !j.contains("cos") || !j.contains("sin"))
    throw ConfigError("orbit: missing params, cutoff, mean, cos or sin");
  Orbit o;
  o.params = params_from_json(j.at("params"));
  int K = 0;
  read_field(j, "cutoff", K, "orbit");
  o.loop = FourierLoop(o.params.d, K);
  const auto& mean = j.at("mean");
  const auto& cs = j.at("cos");
  const auto& sn = j.at("sin");
  if (!mean.is_array() || static_cast<int>(mean.size()) != o.params.d) throw ConfigError("orbit: mean has wrong length");
  if (!cs.is_array() || !sn.is_array() || static_cast<int>(cs.size()) != K || static_cast<int>(sn.size()) != K)
    throw ConfigError("orbit: cos/sin must have cutoff rows");
  try {
    for (int i = 0; i < o.params.d; ++i) o.loop.mean(i) = mean[i].get<double>();
    for (int k = 1; k <= K; ++k) {
      if (static_cast<int>(cs[k - 1].size()) != o.params.d || static_cast<int>(sn[k - 1].size()) != o.params.d)
        throw ConfigError("orbit: coefficient row has wrong length");
      for (int i = 0; i < o.params.d; ++i) {
        o.loop.cos(k, i) = cs[k - 1][i].get<double>();
        o.loop.sin(k, i) = sn[k - 1][i].get<double>();
      }
    }
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("orbit: coefficients must be numbers");
  }
  return o;
}

// ---------------------------------------------------------------------------------------------
// Configs

inline Json to_json(const DescentConfig& c) {
  return Json{{"max_iters", c.max_iters},
              {"grad_tol", c.grad_tol},
              {"initial_step", c.initial_step},
              {"max_step", c.max_step},
              {"backtrack", c.backtrack},
              {"armijo", c.armijo},
              {"min_separation_guard", c.min_separation_guard},
              {"seed", c.seed},
              {"cutoff", c.cutoff},
              {"grid", c.grid},
              {"symmetry", to_string(c.symmetry)},
              {"pin_mean", c.pin_mean},
              {"metric", to_string(c.metric)},
              {"metric_shift", c.metric_shift},
              {"adaptive_shift", c.adaptive_shift},
              {"escape_factor", c.escape_factor},
              {"record_history", c.record_history}};
}

inline MetricKind metric_from_string(const std::string& s) {
  if (s == "sobolev") return MetricKind::sobolev;
  if (s == "euclidean") return MetricKind::euclidean;
  throw ConfigError("unknown metric '" + s + "'");
}

inline DescentConfig descent_config_from_json(const Json& j) {
  const std::string w = "descent";
  require_keys(j,
               {"max_iters", "grad_tol", "initial_step", "max_step", "backtrack", "armijo", "min_separation_guard", "seed",
                "cutoff", "grid", "symmetry", "pin_mean", "metric", "metric_shift", "adaptive_shift", "escape_factor",
                "record_history"},
               w);
  DescentConfig c;
  read_field(j, "max_iters", c.max_iters, w);
  read_field(j, "grad_tol", c.grad_tol, w);
  read_field(j, "initial_step", c.initial_step, w);
  read_field(j, "max_step", c.max_step, w);
  read_field(j, "backtrack", c.backtrack, w);
  read_field(j, "armijo", c.armijo, w);
  read_field(j, "min_separation_guard", c.min_separation_guard, w);
  read_field(j, "seed", c.seed, w);
  read_field(j, "cutoff", c.cutoff, w);
  read_field(j, "grid", c.grid, w);
  std::string sym = to_string(c.symmetry), metric = to_string(c.metric);
  read_field(j, "symmetry", sym, w);
  read_field(j, "metric", metric, w);
  c.symmetry = symmetry_from_string(sym);
  c.metric = metric_from_string(metric);
  read_field(j, "pin_mean", c.pin_mean, w);
  read_field(j, "metric_shift", c.metric_shift, w);
  read_field(j, "adaptive_shift", c.adaptive_shift, w);
  read_field(j, "escape_factor", c.escape_factor, w);
  read_field(j, "record_history", c.record_history, w);
  c.validate();
  return c;
}

inline Json to_json(const MountainPassConfig& c) {
  Json j{{"nodes", c.nodes},
         {"cutoff", c.cutoff},
         {"grid", c.grid},
         {"symmetry", to_string(c.symmetry)},
         {"max_iters", c.max_iters},
         {"local_sweeps", c.local_sweeps},
         {"step", c.step},
         {"stall_tol", c.stall_tol},
         {"stall_window", c.stall_window},
         {"climb_iters", c.climb_iters},
         {"climb_switch", c.climb_switch},
         {"newton_iters", c.newton_iters},
         {"saddle_tol", c.saddle_tol},
         {"metric_shift", c.metric_shift},
         {"refine_limit", c.refine_limit},
         {"seed", c.seed},
         {"probe_directions", c.probe_directions},
         {"probe_step", c.probe_step}};
  j["lift"] = c.lift ? loop_coefficients(*c.lift) : Json(nullptr);
  return j;
}

/// Everything but the lift, which needs the loop shape and is read by the caller.
inline MountainPassConfig mountain_pass_config_from_json(const Json& j) {
  const std::string w = "mountain_pass";
  require_keys(j,
               {"nodes", "cutoff", "grid", "symmetry", "max_iters", "local_sweeps", "step", "stall_tol", "stall_window",
                "climb_iters", "climb_switch", "newton_iters", "saddle_tol", "metric_shift", "refine_limit", "seed",
                "probe_directions", "probe_step"},
               w);
  MountainPassConfig c;
  read_field(j, "nodes", c.nodes, w);
  read_field(j, "cutoff", c.cutoff, w);
  read_field(j, "grid", c.grid, w);
  std::string sym = to_string(c.symmetry);
  read_field(j, "symmetry", sym, w);
  c.symmetry = symmetry_from_string(sym);
  read_field(j, "max_iters", c.max_iters, w);
  read_field(j, "local_sweeps", c.local_sweeps, w);
  read_field(j, "step", c.step, w);
  read_field(j, "stall_tol", c.stall_tol, w);
  read_field(j, "stall_window", c.stall_window, w);
  read_field(j, "climb_iters", c.climb_iters, w);
  read_field(j, "climb_switch", c.climb_switch, w);
  read_field(j, "newton_iters", c.newton_iters, w);
  read_field(j, "saddle_tol", c.saddle_tol, w);
  read_field(j, "metric_shift", c.metric_shift, w);
  read_field(j, "refine_limit", c.refine_limit, w);
  read_field(j, "seed", c.seed, w);
  read_field(j, "probe_directions", c.probe_directions, w);
  read_field(j, "probe_step", c.probe_step, w);
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------------------------
// Reports

inline Json to_json(const ClusterStructure& c) {
  return Json{{"j", c.j},
              {"k_tilde", c.k_tilde},
              {"assignment", c.assignment},
              {"drift", c.drift},
              {"distance_profile", c.distance_profile},
              {"matches_residue_partition", c.matches_residue_partition}};
}

inline Json to_json(const MinimizeResult& r) {
  Json j{{"action", Json{{"kinetic", r.action.kinetic}, {"potential", r.action.potential}, {"total", r.action.total},
                         {"grid_size", r.action.grid_size}}},
         {"grad_norm", r.grad_norm},
         {"newton_residual", r.newton_residual},
         {"iters", r.iters},
         {"converged", r.converged},
         {"escaped_to_infinity", r.escaped_to_infinity},
         {"stop", to_string(r.stop)},
         {"initial_scale", r.initial_scale},
         {"final_scale", r.final_scale},
         {"diagnostics", to_json(r.diagnostics)}};
  j["clusters"] = r.clusters ? to_json(*r.clusters) : Json(nullptr);
  return j;
}

inline Json to_json(const CirculantSpectrum& s) {
  return Json{{"n", s.n},
              {"alpha", s.alpha},
              {"variant", s.variant},
              {"xi_bar", s.xi_bar},
              {"mu_bar", s.mu_bar},
              {"c", s.c},
              {"c_tilde", s.c_tilde},
              {"deltas", s.deltas},
              {"multiplicities", s.multiplicities},
              {"delta_max", s.delta_max},
              {"distinct_eigenvalues", s.deltas.size()}};
}

inline Json to_json(const PaperConstants& p) {
  return Json{{"c_tilde", p.c_tilde}, {"c_omega", p.c_omega}, {"radius_printed", p.radius_printed}};
}

inline Json to_json(const CircleCandidate& c) {
  return Json{{"winding", c.winding}, {"radius", c.radius}, {"action", c.action}};
}

template <class T>
Json opt_json(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

inline Json to_json(const RegimeReport& r) {
  Json j{{"n", r.n},
         {"alpha", r.alpha},
         {"omega", r.omega},
         {"regime", to_string(r.regime)},
         {"predicted_winding", opt_json(r.predicted_winding)},
         {"tied_windings", r.tied_windings},
         {"predicted_radius", opt_json(r.predicted_radius)},
         {"predicted_action", opt_json(r.predicted_action)},
         {"predicted_period", opt_json(r.predicted_period)}};
  j["cluster_shape"] =
      r.cluster_shape ? Json{{"j", r.cluster_shape->first}, {"k_tilde", r.cluster_shape->second}} : Json(nullptr);
  j["omega_bar"] = r.omega_bar;
  j["l"] = r.l;
  j["evidence"] = r.evidence;
  if (r.hypothesis) {
    Json best = Json::array();
    for (const auto& c : r.hypothesis->best) best.push_back(to_json(c));
    j["hypothesis"] = Json{{"best", best}, {"paper_constants", to_json(r.hypothesis->paper_constants)}};
  } else {
    j["hypothesis"] = nullptr;
  }
  j["paper_constants"] = r.paper_constants ? to_json(*r.paper_constants) : Json(nullptr);
  return j;
}

inline Json to_json(const BoundChainReport& r) {
  return Json{{"A", r.A},
              {"A_tilde", r.A_tilde},
              {"A_bar_oracle", r.A_bar_oracle},
              {"A_bar_paper", r.A_bar_paper},
              {"xi", r.xi},
              {"y_value", r.y_value},
              {"slack", {r.slack_tilde, r.slack_bar}}};
}

inline Json to_json(const SaddleResult& r, const SystemParams& p) {
  Json j{{"action", r.action},
         {"grad_norm", r.grad_norm},
         {"newton_residual", r.newton_residual},
         {"min_separation", r.min_separation},
         {"converged", r.converged},
         {"degenerate", r.degenerate},
         {"sweeps", r.sweeps},
         {"climb_iters", r.climb_iters},
         {"newton_iters", r.newton_iters},
         {"max_node", r.max_node},
         {"max_history", r.max_history}};
  Json prof = Json::array();
  for (const auto& e : path_energy_profile(r.path).entries) prof.push_back(Json{{"node", e.node}, {"action", e.action}});
  j["profile"] = prof;
  if (r.probe)
    j["probe"] = Json{{"tangent_curvature", r.probe->tangent_curvature},
                      {"transverse_curvatures", r.probe->transverse_curvatures},
                      {"min_transverse", r.probe->min_transverse}};
  else
    j["probe"] = nullptr;
  j["saddle"] = orbit_to_json(r.loop, p);
  return j;
}

/// A path checkpoint: array of orbit objects.
inline Json path_to_json(const LoopPath& path, const SystemParams& p) {
  Json arr = Json::array();
  for (const auto& x : path.nodes) arr.push_back(orbit_to_json(x, p, false));
  return arr;
}

// ---------------------------------------------------------------------------------------------
// Text output

/// Shortest round-trip decimal; identical inputs give identical bytes.
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Leading comment line carrying the resolved config, so CSVs are self-describing.
inline std::string csv_config_line(const Json& config) { return "# config: " + config.dump() + "\n"; }

inline std::string history_csv(const std::vector<IterationRecord>& h, const Json& config) {
  std::string out = csv_config_line(config) + "iter,action,grad_norm,step\n";
  for (const auto& r : h) out += std::to_string(r.iter) + "," + num(r.action) + "," + num(r.grad_norm) + "," + num(r.step) + "\n";
  return out;
}

/// Columns t, then x_1..x_d of body 0, body 1, ...
inline std::string samples_csv(const FourierLoop& x, const SystemParams& p, int samples, const Json& config) {
  if (samples < 1) throw Error("samples_csv: need at least one sample");
  std::string out = csv_config_line(config) + "t";
  for (int b = 0; b < p.n; ++b)
    for (int i = 1; i <= x.dim(); ++i) out += ",b" + std::to_string(b) + "_x" + std::to_string(i);
  out += "\n";
  for (int j = 0; j < samples; ++j) {
    const double t = two_pi * j / samples;
    out += num(t);
    for (int b = 0; b < p.n; ++b)
      for (double v : evaluate(x, t + b * p.tau())) out += "," + num(v);
    out += "\n";
  }
  return out;
}

struct SvgOptions {
  int plane_x = 0;
  int plane_y = 1;
  int samples = 400;  ///< per body
  double stroke = 1.5;
  int size = 480;
};

struct SvgCurve {
  FourierLoop loop;
  SystemParams params;
  std::string label;
  bool all_bodies = true;  ///< otherwise only body 0, dashed
};

inline std::string svg_color(int i, int count) {
  // evenly spaced hues, fixed saturation and lightness
  const double h = 360.0 * i / std::max(1, count);
  char buf[48];
  std::snprintf(buf, sizeof buf, "hsl(%d,70%%,42%%)", static_cast<int>(std::lround(h)) % 360);
  return buf;
}

/// Orbits projected on (plane_x, plane_y). Each body gets its own stroke colour.
inline std::string orbits_svg(const std::vector<SvgCurve>& curves, const SvgOptions& o, const Json& config) {
  if (curves.empty()) throw Error("orbits_svg: nothing to draw");
  std::vector<std::vector<std::array<double, 2>>> polylines;
  std::vector<std::string> colors, labels;
  std::vector<bool> dashed;
  double lo_x = 1e300, hi_x = -1e300, lo_y = 1e300, hi_y = -1e300;
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const auto& cv = curves[c];
    if (o.plane_x < 0 || o.plane_y < 0 || o.plane_x >= cv.loop.dim() || o.plane_y >= cv.loop.dim() || o.plane_x == o.plane_y)
      throw Error("orbits_svg: bad projection plane");
    const int bodies = cv.all_bodies ? cv.params.n : 1;
    for (int b = 0; b < bodies; ++b) {
      std::vector<std::array<double, 2>> pts;
      for (int j = 0; j <= o.samples; ++j) {
        const auto v = evaluate(cv.loop, two_pi * j / o.samples + b * cv.params.tau());
        pts.push_back({v[static_cast<std::size_t>(o.plane_x)], v[static_cast<std::size_t>(o.plane_y)]});
        lo_x = std::min(lo_x, pts.back()[0]);
        hi_x = std::max(hi_x, pts.back()[0]);
        lo_y = std::min(lo_y, pts.back()[1]);
        hi_y = std::max(hi_y, pts.back()[1]);
      }
      polylines.push_back(std::move(pts));
      colors.push_back(cv.all_bodies ? svg_color(b, cv.params.n) : svg_color(static_cast<int>(c), static_cast<int>(curves.size())));
      labels.push_back(cv.label + (cv.all_bodies ? " body " + std::to_string(b) : ""));
      dashed.push_back(!cv.all_bodies);
    }
  }
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double pad = 20.0, scale = (o.size - 2 * pad) / span;
  const double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << o.size << "\" height=\"" << o.size << "\" viewBox=\"0 0 "
    << o.size << " " << o.size << "\">\n";
  std::string cfg = config.dump();
  for (std::string::size_type p = 0; (p = cfg.find("--", p)) != std::string::npos;) cfg.replace(p, 2, "- -");
  s << "<metadata><!-- " << cfg << " --></metadata>\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  char buf[64];
  for (std::size_t i = 0; i < polylines.size(); ++i) {
    s << "<polyline fill=\"none\" stroke=\"" << colors[i] << "\" stroke-width=\"" << o.stroke << "\"";
    if (dashed[i]) s << " stroke-dasharray=\"4 3\"";
    s << " points=\"";
    for (const auto& p : polylines[i]) {
      std::snprintf(buf, sizeof buf, "%.3f,%.3f ", 0.5 * o.size + scale * (p[0] - cx), 0.5 * o.size - scale * (p[1] - cy));
      s << buf;
    }
    s << "\"><title>" << labels[i] << "</title></polyline>\n";
  }
  s << "</svg>\n";
  return s.str();
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p, std::ios::binary);
  if (!f) throw Error("cannot write " + p.string());
  f << text;
  if (!f) throw Error("write failed for " + p.string());
}

inline Json read_json_file(const std::filesystem::path& p) {
  std::ifstream f(p);
  if (!f) throw ConfigError("cannot read " + p.string());
  try {
    return Json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(p.string() + ": " + e.what());
  }
}

}  // namespace choreo
