#include <gtest/gtest.h>

#include <cmath>

#include "choreo/mountain_pass.hpp"

using namespace choreo;

namespace {

struct TwoCircles {
  SystemParams params{3, 3, 1.0, 1.5};
  FourierLoop a, b;
  MountainPassConfig cfg;
  double end_action = 0.0;

  explicit TwoCircles(int cutoff = 16) {
    const auto c = circle_optimum(3, 1.0, 1.5, -1);
    end_action = c.action;
    a = circle_loop(3, cutoff, c.radius, -1);
    b = circle_loop(3, cutoff, c.radius, -2);
    cfg.cutoff = cutoff;
    FourierLoop lift(3, cutoff);
    lift.cos(1, 2) = 0.5;
    lift.sin(2, 2) = 0.35;
    cfg.lift = lift;
  }
};

const SaddleResult& two_circle_saddle() {
  static const SaddleResult r = [] {
    TwoCircles tc;
    return mountain_pass(tc.a, tc.b, tc.params, tc.cfg);
  }();
  return r;
}

}  // namespace

TEST(MountainPass, EqualEndpointsReturnImmediately) {
  SystemParams p{3, 2, 1.0, 0.0};
  const auto x = circle_loop(2, 6, std::pow(3.0, -1.0 / 6.0), 1);
  MountainPassConfig c;
  c.cutoff = 6;
  c.nodes = 3;
  const auto r = mountain_pass(x, x, p, c);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.loop, x);
  EXPECT_NEAR(r.action, std::pow(3.0, 2.0 / 3.0) * pi, 1e-12);
  const auto prof = path_energy_profile(r.path);
  ASSERT_EQ(prof.entries.size(), 3u);
  for (const auto& e : prof.entries) EXPECT_EQ(e.action, r.action);
}

TEST(MountainPass, RejectsBadInput) {
  SystemParams p{3, 2, 1.0, 0.0};
  MountainPassConfig c;
  c.nodes = 2;
  EXPECT_THROW(mountain_pass(circle_loop(2, 4, 1.0, 1), circle_loop(2, 4, 1.0, -1), p, c), Error);
  EXPECT_THROW(mountain_pass(circle_loop(2, 4, 1.0, 1), circle_loop(3, 4, 1.0, -1), p, MountainPassConfig{}),
               DimensionError);
}

TEST(MountainPass, InitialPathPeaksAboveEndpoints) {
  const auto& r = two_circle_saddle();
  ASSERT_FALSE(r.path_history.empty());
  const auto& first = r.path_history.front();
  TwoCircles tc;
  EXPECT_GT(first.max_action(), tc.end_action + 0.1);
}

TEST(MountainPass, SaddleBetweenTiedCircles) {
  const auto& r = two_circle_saddle();
  TwoCircles tc;
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.grad_norm, 1e-6);
  EXPECT_GT(r.action, tc.end_action + 0.5);
  EXPECT_GT(r.min_separation, 0.05);
  EXPECT_LT(r.newton_residual, 1e3 * tc.cfg.saddle_tol);
  const auto d = diagnostics(r.loop, tc.params);
  EXPECT_GT(d.radius_fit.rms, 1e-2);  // not a circle
}

TEST(MountainPass, EndpointsUntouchedAndMaxMonotone) {
  const auto& r = two_circle_saddle();
  TwoCircles tc;
  EXPECT_EQ(r.path.nodes.front(), tc.a);
  EXPECT_EQ(r.path.nodes.back(), tc.b);
  for (std::size_t i = 1; i < r.max_history.size(); ++i) EXPECT_LE(r.max_history[i], r.max_history[i - 1] + 1e-10);
}

TEST(MountainPass, ProfileUnimodal) {
  const auto& r = two_circle_saddle();
  const auto prof = path_energy_profile(r.path);
  const std::size_t m = prof.max_node;
  for (std::size_t i = 1; i <= m; ++i) EXPECT_GE(prof.entries[i].action, prof.entries[i - 1].action - 1e-8);
  for (std::size_t i = m + 1; i < prof.entries.size(); ++i)
    EXPECT_LE(prof.entries[i].action, prof.entries[i - 1].action + 1e-8);
}

TEST(MountainPass, SaddleSignature) {
  const auto& r = two_circle_saddle();
  ASSERT_TRUE(r.probe);
  EXPECT_LT(r.probe->tangent_curvature, 0.0);
  EXPECT_EQ(r.probe->transverse_curvatures.size(), 20u);
  EXPECT_GE(r.probe->min_transverse, -1e-4);
}

TEST(MountainPass, FigureEightUnderSymmetry) {
  const int K = 24;
  SystemParams p{3, 3, 1.0, 0.0};
  const double R = std::pow(3.0, -1.0 / 6.0);
  FourierLoop a(3, K), b(3, K);
  a.sin(1, 1) = R;
  a.cos(1, 2) = R;
  b.sin(1, 1) = R;
  b.cos(1, 2) = -R;
  MountainPassConfig c;
  c.cutoff = K;
  c.symmetry = SymmetryGroup::eight3d;
  FourierLoop lift(3, K);
  lift.sin(2, 0) = 0.5;
  c.lift = lift;
  const auto r = mountain_pass(a, b, p, c);
  EXPECT_TRUE(r.converged);
  EXPECT_LT(r.newton_residual, 1e3 * c.saddle_tol);
  EXPECT_GT(r.action, std::pow(3.0, 2.0 / 3.0) * pi);
  const auto e = eight_check(r.loop);
  EXPECT_LT(e.sup_out_of_plane, 1e-3);
  EXPECT_EQ(e.sign_changes, 2);
  EXPECT_EQ(e.winding, 0);
  EXPECT_LT(e.lobe_area_left * e.lobe_area_right, 0.0);
  EXPECT_TRUE(e.is_eight);
}

TEST(EightCheck, CircleIsNotAnEight) {
  FourierLoop x(3, 4);
  x.cos(1, 0) = 1.0;
  x.sin(1, 1) = 1.0;
  const auto e = eight_check(x);
  EXPECT_EQ(e.winding, 1);
  EXPECT_FALSE(e.is_eight);
  EXPECT_THROW(eight_check(FourierLoop(2, 4)), DimensionError);
}

TEST(EightCheck, LissajousEight) {
  FourierLoop x(3, 4);
  x.sin(2, 0) = 0.3;
  x.sin(1, 1) = 1.0;
  x.cos(1, 2) = 1e-4;
  const auto e = eight_check(x);
  EXPECT_TRUE(e.is_eight);
  EXPECT_NEAR(e.sup_out_of_plane, 1e-4, 1e-12);
  EXPECT_NEAR(std::abs(e.lobe_area_left), 0.4, 1e-3);  // area of one lobe: 2 * 0.3 * 2/3
}
