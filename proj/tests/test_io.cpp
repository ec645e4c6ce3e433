#include <gtest/gtest.h>

#include <sstream>

#include "choreo/io.hpp"
#include "choreo/random.hpp"
#include "choreo/verify.hpp"

using namespace choreo;

TEST(OrbitJson, RoundTripIsExact) {
  Rng rng(11);
  SystemParams p{4, 3, 1.5, 0.7};
  auto x = random_loop(3, 5, rng, 1.0, true);
  const Json j = orbit_to_json(x, p);
  EXPECT_EQ(j["cutoff"], 5);
  EXPECT_EQ(j["cos"].size(), 5u);
  EXPECT_EQ(j["sin"][0].size(), 3u);
  const auto back = orbit_from_json(Json::parse(j.dump()));
  EXPECT_EQ(back.loop, x);
  EXPECT_EQ(back.params.n, 4);
  EXPECT_EQ(back.params.omega, 0.7);
}

TEST(OrbitJson, SchemaKeys) {
  SystemParams p{3, 2, 1.0, 0.0};
  const Json j = orbit_to_json(circle_loop(2, 2, 1.0, 1), p);
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  EXPECT_EQ(keys, (std::vector<std::string>{"params", "cutoff", "mean", "cos", "sin", "diagnostics"}));
  EXPECT_EQ(j["diagnostics"]["winding"], 1);
}

TEST(OrbitJson, RejectsUnknownAndMalformed) {
  SystemParams p{3, 2, 1.0, 0.0};
  Json j = orbit_to_json(circle_loop(2, 2, 1.0, 1), p);
  Json extra = j;
  extra["colour"] = "red";
  EXPECT_THROW(orbit_from_json(extra), ConfigError);
  Json shortrow = j;
  shortrow["cos"][0] = Json::array({1.0});
  EXPECT_THROW(orbit_from_json(shortrow), ConfigError);
  Json badparams = j;
  badparams["params"]["mass"] = 1;
  EXPECT_THROW(orbit_from_json(badparams), ConfigError);
}

TEST(Config, DescentRoundTripAndStrictness) {
  DescentConfig c;
  c.grad_tol = 1e-9;
  c.metric = MetricKind::euclidean;
  c.symmetry = SymmetryGroup::eight3d;
  const auto back = descent_config_from_json(Json::parse(to_json(c).dump()));
  EXPECT_EQ(to_json(back), to_json(c));
  Json bad = to_json(c);
  bad["momentum"] = 0.9;
  EXPECT_THROW(descent_config_from_json(bad), ConfigError);
  Json wrong = to_json(c);
  wrong["max_iters"] = "many";
  EXPECT_THROW(descent_config_from_json(wrong), ConfigError);
}

TEST(Config, MountainPassStrictness) {
  Json j = to_json(MountainPassConfig{});
  j.erase("lift");
  EXPECT_NO_THROW(mountain_pass_config_from_json(j));
  j["nodes"] = 2;
  EXPECT_THROW(mountain_pass_config_from_json(j), Error);
  EXPECT_THROW(mountain_pass_config_from_json(Json{{"node", 5}}), ConfigError);
}

TEST(Csv, HistoryColumns) {
  std::vector<IterationRecord> h{{0, 2.5, 1.0, 0.0, 1.0}, {1, 2.0, 0.5, 1.0, 1.0}};
  const auto s = history_csv(h, Json{{"k", 1}});
  std::istringstream in(s);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line.rfind("# config: ", 0), 0u);
  std::getline(in, line);
  EXPECT_EQ(line, "iter,action,grad_norm,step");
  std::getline(in, line);
  EXPECT_EQ(line, "0,2.5,1,0");
}

TEST(Csv, SamplesFollowBodies) {
  SystemParams p{3, 2, 1.0, 0.0};
  const auto x = circle_loop(2, 2, 2.0, 1);
  const auto s = samples_csv(x, p, 4, Json::object());
  std::istringstream in(s);
  std::string line;
  std::getline(in, line);
  std::getline(in, line);
  EXPECT_EQ(line, "t,b0_x1,b0_x2,b1_x1,b1_x2,b2_x1,b2_x2");
  std::getline(in, line);
  // t = 0: body b sits at angle 2 pi b / 3
  std::vector<double> v;
  std::stringstream row(line);
  for (std::string cell; std::getline(row, cell, ',');) v.push_back(std::stod(cell));
  ASSERT_EQ(v.size(), 7u);
  EXPECT_NEAR(v[1], 2.0, 1e-15);
  EXPECT_NEAR(v[3], 2.0 * std::cos(two_pi / 3), 1e-14);
  EXPECT_NEAR(v[6], 2.0 * std::sin(2 * two_pi / 3), 1e-14);
}

TEST(Svg, OneStrokePerBodyAndDeterministic) {
  SystemParams p{4, 3, 1.0, 0.0};
  const auto x = circle_loop(3, 2, 1.0, 1);
  SvgOptions o;
  o.plane_x = 0;
  o.plane_y = 2;
  const auto a = orbits_svg({{x, p, "orbit", true}, {x, p, "ref", false}}, o, Json{{"tag", "x--y"}});
  const auto b = orbits_svg({{x, p, "orbit", true}, {x, p, "ref", false}}, o, Json{{"tag", "x--y"}});
  EXPECT_EQ(a, b);
  std::size_t count = 0;
  for (std::size_t pos = 0; (pos = a.find("<polyline", pos)) != std::string::npos; ++pos) ++count;
  EXPECT_EQ(count, 5u);
  EXPECT_NE(a.find("stroke-dasharray"), std::string::npos);
  EXPECT_EQ(a.find("x--y"), std::string::npos);  // no "--" inside the XML comment
  o.plane_y = 3;
  EXPECT_THROW(orbits_svg({{x, p, "orbit", true}}, o, Json::object()), Error);
}

TEST(Reports, RegimeAndSpectrum) {
  const Json r = to_json(classify(6, 1.0, 1.8));
  EXPECT_EQ(r["regime"], "NONRIGID_WINDING_K");
  EXPECT_EQ(r["cluster_shape"]["j"], 3);
  EXPECT_TRUE(r["evidence"].is_array());
  EXPECT_FALSE(r["evidence"].empty());
  const Json s = to_json(circulant_spectrum(6, 1.0));
  EXPECT_EQ(s["distinct_eigenvalues"], 4);
  EXPECT_EQ(s["multiplicities"], Json::array({1, 2, 2, 1}));
}

TEST(Verify, SuitesRouteAndPass) {
  VerifyOptions o;
  o.seeds = 20;
  const auto ineq = run_verify(Suite::inequalities, o);
  EXPECT_TRUE(ineq.passed());
  for (const auto& c : ineq.checks) EXPECT_EQ(c.suite, "inequalities") << c.name;
  const auto all = run_verify(Suite::all, o);
  EXPECT_TRUE(all.passed());
  EXPECT_GT(all.checks.size(), ineq.checks.size());
}

TEST(Verify, FlippedDeltaIsCaught) {
  VerifyOptions o;
  o.seeds = 5;
  o.fault = Fault::flip_delta1;
  const auto r = run_verify(Suite::spectral, o);
  EXPECT_FALSE(r.passed());
  bool named = false;
  for (const auto& c : r.checks)
    if (c.name == "spectral.delta1") named = !c.passed;
  EXPECT_TRUE(named);
  EXPECT_THROW(run_verify(Suite::all, VerifyOptions{0, Fault::none}), ConfigError);
  EXPECT_THROW(suite_from_string("everything"), ConfigError);
}
