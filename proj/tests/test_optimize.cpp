#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <set>

#include "choreo/bounds.hpp"
#include "choreo/optimize.hpp"

using namespace choreo;

namespace {

const double lagrange_radius = std::pow(3.0, -1.0 / 6.0);
const double lagrange_action = std::pow(3.0, 2.0 / 3.0) * pi;

void expect_monotone(const MinimizeResult& r) {
  for (std::size_t i = 1; i < r.history.size(); ++i)
    EXPECT_LE(r.history[i].action, r.history[i - 1].action + 1e-12) << "iter " << i;
}

FourierLoop rotate_plane(const FourierLoop& x, double theta) {
  FourierLoop y = x;
  const double c = std::cos(theta), s = std::sin(theta);
  auto rot = [&](double& a, double& b) {
    const double u = c * a - s * b, v = s * a + c * b;
    a = u;
    b = v;
  };
  rot(y.mean(0), y.mean(1));
  for (int k = 1; k <= x.cutoff(); ++k) {
    rot(y.cos(k, 0), y.cos(k, 1));
    rot(y.sin(k, 0), y.sin(k, 1));
  }
  return y;
}

}  // namespace

TEST(Metric, InverseMatchesQuadraticForm) {
  Rng rng(11);
  for (double omega : {0.0, 1.3, 3.0}) {
    for (int d : {2, 3}) {
      const KineticMetric m(MetricKind::sobolev, omega, 0.7);
      const auto g = random_loop(d, 6, rng, 1.0, true);
      const auto v = random_loop(d, 6, rng, 1.0, true);
      EXPECT_NEAR(m.inner(m.apply_inverse(g), v), g.dot(v), 1e-12 * (1.0 + std::abs(g.dot(v))));
    }
  }
}

TEST(Metric, TinyShiftStaysFinite) {
  Rng rng(12);
  const KineticMetric m(MetricKind::sobolev, 3.0, 1e-14);
  const auto g = random_loop(2, 5, rng);
  const auto d = m.apply_inverse(g);
  EXPECT_TRUE(d.finite());
  EXPECT_GT(g.dot(d), 0.0);
}

TEST(Metric, EuclideanIsIdentity) {
  Rng rng(13);
  const auto g = random_loop(3, 4, rng);
  EXPECT_EQ(KineticMetric(MetricKind::euclidean, 2.0, 1.0).apply_inverse(g), g);
}

TEST(InitCircle, ChordAtNoiseZero) {
  for (int n : {3, 5, 7}) {
    SystemParams p{n, 2, 1.0, 0.0};
    const auto x = init_circle(p, 1, 1.0, 0.0, 0, 4);
    EXPECT_NEAR(min_separation(x, n), 2.0 * std::sin(pi / n), 1e-9);
  }
}

TEST(InitCircle, CollidingWindingRejected) {
  SystemParams p{4, 2, 1.0, 0.0};
  EXPECT_THROW(init_circle(p, 2, 1.0, 0.0, 0, 4), CollisionError);
  EXPECT_NO_THROW(init_circle(p, 2, 1.0, 0.05, 3, 4));
}

TEST(InitCircle, SeedDeterminism) {
  SystemParams p{3, 3, 1.0, 0.0};
  EXPECT_EQ(init_circle(p, 1, 1.0, 0.1, 42, 8), init_circle(p, 1, 1.0, 0.1, 42, 8));
  EXPECT_FALSE(init_circle(p, 1, 1.0, 0.1, 42, 8) == init_circle(p, 1, 1.0, 0.1, 43, 8));
}

TEST(Minimize, LagrangeCircleFromNoise) {
  SystemParams p{3, 2, 1.0, 0.0};
  DescentConfig c;
  c.cutoff = 12;
  const auto r = minimize(p, init_circle(p, 1, 1.0, 0.05, 7, 12), c);
  ASSERT_TRUE(r.converged);
  EXPECT_FALSE(r.escaped_to_infinity);
  EXPECT_LT(r.grad_norm, 1e-8);
  EXPECT_NEAR(r.diagnostics.radius_fit.radius, lagrange_radius, 1e-4);
  EXPECT_NEAR(r.action.total, lagrange_action, 1e-5);
  EXPECT_EQ(std::abs(r.diagnostics.winding), 1);
  EXPECT_LT(r.newton_residual, 1e2 * c.grad_tol);
  EXPECT_EQ(r.clusters->j, 1);
  expect_monotone(r);
}

TEST(Minimize, EuclideanMetricAlsoDescends) {
  SystemParams p{3, 2, 1.0, 0.0};
  DescentConfig c;
  c.cutoff = 6;
  c.metric = MetricKind::euclidean;
  c.max_iters = 300;
  const auto r = minimize(p, init_circle(p, 1, 1.0, 0.05, 7, 6), c);
  expect_monotone(r);
  EXPECT_LT(r.action.total, r.history.front().action);
  EXPECT_NEAR(r.action.total, lagrange_action, 1e-3);
}

TEST(Minimize, ZeroIterationsReturnsStart) {
  SystemParams p{3, 2, 1.0, 0.0};
  DescentConfig c;
  c.cutoff = 4;
  c.max_iters = 0;
  const auto x = init_circle(p, 1, 1.0, 0.05, 1, 4);
  const auto r = minimize(p, x, c);
  EXPECT_EQ(r.loop, x);
  EXPECT_EQ(r.iters, 0);
  EXPECT_FALSE(r.converged);
}

TEST(Minimize, RejectsBadInput) {
  SystemParams p{3, 2, 1.0, 0.0};
  DescentConfig c;
  c.backtrack = 1.5;
  EXPECT_THROW(minimize(p, circle_loop(2, 16, 1.0, 1), c), Error);
  EXPECT_THROW(minimize(p, circle_loop(3, 16, 1.0, 1), DescentConfig{}), DimensionError);
}

TEST(Minimize, NonRigidClusterOrbit) {
  SystemParams p{6, 2, 1.0, 1.8};
  DescentConfig c;
  c.cutoff = 24;
  const auto r = minimize(p, init_circle(p, -2, 1.0, 0.05, 1, 24), c);
  ASSERT_TRUE(r.converged);
  EXPECT_EQ(std::abs(r.diagnostics.winding), 2);
  EXPECT_GT(r.diagnostics.radius_fit.rms, 1e-2);
  ASSERT_TRUE(r.clusters);
  EXPECT_EQ(r.clusters->j, 3);
  EXPECT_EQ(r.clusters->k_tilde, 2);
  EXPECT_TRUE(r.clusters->matches_residue_partition);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(r.clusters->assignment[i], r.clusters->assignment[i + 3]);
  EXPECT_LT(r.newton_residual, 1e-6);
  // lower than every admissible circle
  EXPECT_LT(r.action.total, predicted_circle(6, 1.0, 1.8)->best.front().action);
  expect_monotone(r);
}

TEST(Minimize, CoprimeResonanceEscapes) {
  SystemParams p{5, 2, 1.0, 3.0};
  DescentConfig c;
  const auto r = minimize(p, init_circle(p, -3, 1.0, 0.05, 1, c.cutoff), c);
  EXPECT_TRUE(r.escaped_to_infinity);
  EXPECT_FALSE(r.converged);
  EXPECT_GT(r.final_scale, 1e3 * r.initial_scale);
  expect_monotone(r);
}

TEST(Minimize, ClusterResonanceEscapesWithClusters) {
  SystemParams p{6, 2, 1.0, 2.0};
  DescentConfig c;
  const auto r = minimize(p, init_circle(p, -2, 1.0, 0.05, 1, c.cutoff), c);
  EXPECT_TRUE(r.escaped_to_infinity);
  ASSERT_TRUE(r.clusters);
  EXPECT_EQ(r.clusters->j, 3);
  EXPECT_TRUE(r.clusters->matches_residue_partition);
  for (double dr : r.clusters->drift) EXPECT_GT(dr, 10.0);
}

TEST(Minimize, RotatingCircleMatchesOracle) {
  SystemParams p{5, 2, 1.0, 2.1};
  DescentConfig c;
  const auto r = minimize(p, init_circle(p, -2, 1.0, 0.05, 3, c.cutoff), c);
  ASSERT_TRUE(r.converged);
  const auto best = circle_optimum(5, 1.0, 2.1, -2);
  EXPECT_NEAR(r.diagnostics.radius_fit.radius, best.radius, 1e-4);
  EXPECT_NEAR(r.action.total, best.action, 1e-8);
  EXPECT_EQ(r.diagnostics.winding, -2);
}

TEST(Minimize, SymmetryProjectionIsKept) {
  SystemParams p{3, 3, 1.0, 0.0};
  DescentConfig c;
  c.cutoff = 8;
  c.symmetry = SymmetryGroup::eight3d;
  c.max_iters = 50;
  Rng rng(5);
  auto x = random_loop(3, 8, rng, 0.5);
  x.sin(1, 1) += 1.0;
  x.cos(2, 0) += 0.4;
  const auto r = minimize(p, x, c);
  const auto proj = project_symmetry(r.loop, SymmetryGroup::eight3d);
  auto diff = r.loop;
  diff -= proj;
  EXPECT_LT(diff.norm(), 1e-14);
}

TEST(Kepler, NoisyCircleToUnitRadius) {
  DescentConfig c;
  c.cutoff = 8;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    FourierLoop q = circle_loop(2, 8, 1.3, 1);
    Rng rng(seed);
    add_noise(q, rng, 0.05);
    const auto r = minimize_kepler(1.0, q, c);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.diagnostics.radius_fit.radius, 1.0, 1e-4);
    EXPECT_NEAR(r.action.total, 3.0 * pi, 1e-5);
    EXPECT_NEAR(l2_norm_squared(r.loop), two_pi, 1e-6);
  }
}

TEST(FrameGauge, RotatedAndTranslatedStartsAgree) {
  SystemParams p{4, 2, 1.0, 0.0};
  DescentConfig c;
  c.cutoff = 8;
  const auto x = init_circle(p, 1, 1.0, 0.05, 9, 8);
  auto y = rotate_plane(x, 0.9);
  y.mean(0) += 3.0;
  y.mean(1) -= 1.0;
  const auto a = minimize(p, x, c);
  const auto b = minimize(p, y, c);
  ASSERT_TRUE(a.converged && b.converged);
  EXPECT_NEAR(a.action.total, b.action.total, 1e-8);
}

TEST(ConvergedProperty, ResidualCoVanishes) {
  for (int n : {2, 3, 4, 5}) {
    for (double alpha : {1.0, 2.0}) {
      SystemParams p{n, 2, alpha, 0.0};
      DescentConfig c;
      c.cutoff = 8;
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto r = minimize(p, init_circle(p, 1, 1.0, 0.05, seed, 8), c);
        ASSERT_TRUE(r.converged) << n << " " << alpha << " " << seed;
        EXPECT_LT(r.grad_norm, c.grad_tol);
        EXPECT_LT(r.newton_residual, 1e2 * c.grad_tol);
        const auto oracle = circle_optimum(n, alpha, 0.0, 1);
        EXPECT_NEAR(r.action.total, oracle.action, 1e-6 * oracle.action);
        const auto chain = bound_chain(r.loop, p);
        EXPECT_LT(std::abs(chain.slack_tilde), 1e-8);
        EXPECT_LT(std::abs(chain.slack_bar), 1e-8);
        expect_monotone(r);
      }
    }
  }
}

TEST(Clusters, CircleIsOneCluster) {
  SystemParams p{5, 2, 1.0, 0.0};
  const auto cs = detect_clusters(circle_loop(2, 4, 1.0, 1), p);
  EXPECT_EQ(cs.j, 1);
  EXPECT_EQ(cs.k_tilde, 5);
  EXPECT_TRUE(cs.matches_residue_partition);
  ASSERT_EQ(cs.distance_profile.size(), 4u);
  EXPECT_NEAR(cs.distance_profile[0], 2.0 * std::sin(pi / 5), 1e-12);
}

TEST(Clusters, AnsatzGivesResidueClasses) {
  SystemParams p{24, 2, 1.0, 6.1};
  const auto x = cluster_ansatz_loop(2, 8, 6, 5.0, 0.4, 1);
  const auto cs = detect_clusters(x, p);
  EXPECT_EQ(cs.j, 4);
  EXPECT_EQ(cs.k_tilde, 6);
  EXPECT_TRUE(cs.matches_residue_partition);
  for (int i = 0; i < 24; ++i) EXPECT_EQ(cs.assignment[i], cs.assignment[i % 4]);
}

TEST(SuggestInit, FollowsRegime) {
  const auto inert = suggest_init(classify(3, 1.0, 0.0), 2, 0.0, 0, 8);
  EXPECT_EQ(diagnostics(inert, SystemParams{3, 2, 1.0, 0.0}).winding, 1);
  const auto rot = suggest_init(classify(5, 1.0, 2.1), 2, 0.0, 0, 8);
  EXPECT_EQ(diagnostics(rot, SystemParams{5, 2, 1.0, 2.1}).winding, -2);
  const auto cl = suggest_init(classify(6, 1.0, 1.8), 2, 0.01, 0, 8);
  EXPECT_EQ(detect_clusters(cl, SystemParams{6, 2, 1.0, 1.8}).j, 3);
  EXPECT_NO_THROW(suggest_init(classify(5, 1.0, 3.0), 2, 0.05, 0, 8));
  EXPECT_NO_THROW(suggest_init(classify(4, 1.0, 4.0), 2, 0.05, 0, 8));
}

TEST(Multistart, TiedCirclesAtOneAndAHalf) {
  SystemParams p{3, 2, 1.0, 1.5};
  DescentConfig c;
  c.cutoff = 8;
  std::vector<StartSpec> starts(2);
  starts[0].winding = -1;
  starts[1].winding = -2;
  for (auto& s : starts) {
    s.noise = 0.05;
    s.seed = 4;
  }
  const auto m = multistart(p, c, starts);
  ASSERT_EQ(m.table.size(), 2u);
  std::set<int> windings;
  for (const auto& row : m.table) {
    ASSERT_TRUE(row.error.empty()) << row.error;
    ASSERT_TRUE(row.result.converged);
    windings.insert(row.result.diagnostics.winding);
  }
  EXPECT_EQ(windings, (std::set<int>{-1, -2}));
  EXPECT_NEAR(m.table[0].result.action.total, m.table[1].result.action.total, 1e-8);
}

TEST(Multistart, SingleStartAndErrors) {
  SystemParams p{4, 2, 1.0, 0.0};
  DescentConfig c;
  c.cutoff = 6;
  std::vector<StartSpec> one(1);
  one[0].noise = 0.02;
  const auto m = multistart(p, c, one);
  EXPECT_EQ(m.table.size(), 1u);
  EXPECT_EQ(m.best, 0u);
  std::vector<StartSpec> two(2);
  two[0].winding = 2;  // collides at zero noise
  two[1].noise = 0.02;
  const auto m2 = multistart(p, c, two);
  EXPECT_FALSE(m2.table[0].error.empty());
  EXPECT_EQ(m2.best, 1u);
}

TEST(Multistart, ThreadCountDoesNotChangeResults) {
  SystemParams p{3, 2, 1.0, 0.0};
  DescentConfig c;
  c.cutoff = 6;
  std::vector<StartSpec> starts(4);
  for (std::size_t i = 0; i < starts.size(); ++i) {
    starts[i].noise = 0.05;
    starts[i].seed = i;
  }
  setenv("CHOREO_THREADS", "1", 1);
  EXPECT_EQ(thread_cap(), 1u);
  const auto a = multistart(p, c, starts);
  setenv("CHOREO_THREADS", "3", 1);
  const auto b = multistart(p, c, starts);
  unsetenv("CHOREO_THREADS");
  EXPECT_EQ(a.best, b.best);
  for (std::size_t i = 0; i < starts.size(); ++i) EXPECT_EQ(a.table[i].result.loop, b.table[i].result.loop);
}

TEST(Minimize, EscapeScaleGrowsMonotonically) {
  for (auto [n, omega] : {std::pair{5, 3.0}, std::pair{6, 2.0}}) {
    const auto rep = classify(n, 1.0, omega);
    EXPECT_TRUE(predicts_escape(rep.regime));
    SystemParams p{n, 2, 1.0, omega};
    DescentConfig c;
    const auto r = minimize(p, suggest_init(rep, 2, 0.05, 2, c.cutoff), c);
    ASSERT_TRUE(r.escaped_to_infinity) << n;
    for (std::size_t i = 1; i < r.history.size(); ++i) EXPECT_GE(r.history[i].scale, r.history[i - 1].scale * (1 - 1e-9));
  }
}
