#include <gtest/gtest.h>

#include <cmath>

#include "choreo/bounds.hpp"
#include "choreo/diagnostics.hpp"
#include "choreo/random.hpp"

using namespace choreo;

TEST(Poincare, FirstHarmonicIsOne) {
  FourierLoop q(3, 4);
  q.cos(1, 0) = 0.3;
  q.sin(1, 1) = -2.0;
  q.cos(1, 2) = 1.1;
  EXPECT_NEAR(poincare_ratio(q), 1.0, 1e-15);
  EXPECT_TRUE(first_harmonic_only(q));
}

TEST(Poincare, SecondHarmonic) {
  FourierLoop q(2, 3);
  q.cos(2, 0) = 1.0;
  EXPECT_NEAR(poincare_ratio(q), 4.0, 1e-15);
}

TEST(Poincare, MixedHarmonics) {
  FourierLoop q(2, 3);
  q.cos(1, 0) = 1.0;
  q.cos(3, 0) = 0.5;
  EXPECT_NEAR(poincare_ratio(q), 3.25 / 1.25, 1e-14);
}

TEST(Poincare, Errors) {
  EXPECT_THROW(poincare_ratio(FourierLoop(2, 2)), Error);
  FourierLoop q(2, 2);
  q.cos(1, 0) = 1.0;
  q.mean(1) = 0.1;
  EXPECT_THROW(poincare_ratio(q), Error);
}

TEST(PoincareProperty, RandomLoops) {
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    auto q = random_loop(2 + i % 3, 1 + i % 7, rng);
    const double r = poincare_ratio(q);
    EXPECT_GE(r, 1.0 - 1e-12);
    if (!first_harmonic_only(q)) EXPECT_GT(r, 1.0);
  }
}

TEST(Jensen, CircleHasNoGap) {
  SystemParams p{5, 2, 1.3, 0.0};
  auto x = circle_loop(2, 3, 0.7, 1);
  for (int h = 1; h < 5; ++h) EXPECT_NEAR(jensen_gap(x, p, h).gap, 0.0, 1e-12);
}

TEST(Jensen, EllipseHasGap) {
  SystemParams p{2, 2, 1.0, 0.0};
  FourierLoop x(2, 2);
  x.cos(1, 0) = 2.0;
  x.sin(1, 1) = 1.0;
  EXPECT_GT(jensen_gap(x, p, 1).gap, 1e-3);
}

TEST(Jensen, Homogeneity) {
  SystemParams p{3, 3, 1.5, 0.0};
  Rng rng(2);
  auto x = circle_loop(3, 4, 1.0, 1);
  add_noise(x, rng, 0.1);
  const auto a = jensen_gap(x, p, 1);
  const auto b = jensen_gap(2.0 * x, p, 1);
  EXPECT_NEAR(b.gap, std::pow(2.0, -1.5) * a.gap, 1e-12);
  EXPECT_GE(a.gap, 0.0);
}

TEST(Trig, Values) {
  auto t = trig_check(2, pi / 2);
  EXPECT_NEAR(t.lhs, 2.0, 1e-15);
  EXPECT_NEAR(t.rhs, 4.0, 1e-15);
  EXPECT_NEAR(t.margin, 2.0, 1e-15);
  auto u = trig_check(3, pi);
  EXPECT_NEAR(u.lhs, 2.0, 1e-15);
  EXPECT_NEAR(u.rhs, 18.0, 1e-15);
}

TEST(Trig, MarginVanishesAtZero) {
  EXPECT_LT(trig_check(4, 1e-4).margin, 1e-6);
  EXPECT_THROW(trig_check(1, 1.0), Error);
  EXPECT_THROW(trig_check(2, 0.0), Error);
}

TEST(TrigProperty, GridPositive) {
  for (int k = 2; k <= 12; ++k)
    for (int i = 1; 0.01 * i < two_pi - 0.01; ++i) EXPECT_GT(trig_check(k, 0.01 * i).margin, 0.0) << k << " " << i;
}

TEST(PowerMin, SingleWeight) {
  auto r = constrained_power_min({0.25}, 1.5);
  EXPECT_NEAR(r.s[0], 4.0, 1e-15);
  EXPECT_NEAR(r.value, std::pow(0.25, 1.5), 1e-15);
}

TEST(PowerMin, SymmetricPair) {
  auto r = constrained_power_min({0.5, 0.5}, 1.0);
  EXPECT_NEAR(r.s[0], 1.0, 1e-12);
  EXPECT_NEAR(r.s[1], 1.0, 1e-12);
  EXPECT_NEAR(power_ratio({0.5, 0.5}, r.s, 1.0), 2.0, 1e-12);
}

TEST(PowerMin, CirculantWeightsGiveXiBar) {
  auto s = circulant_spectrum(4, 1.0);
  auto r = constrained_power_min(s.mu_bar, 0.5);
  for (int h = 0; h < 3; ++h) EXPECT_NEAR(r.s[h], s.xi_bar[h], 1e-9 * s.xi_bar[h]);
  EXPECT_NEAR(r.value, s.c, 1e-12);
  EXPECT_LT(r.stationarity, 1e-10);
}

TEST(PowerMin, RejectsBadWeights) { EXPECT_THROW(constrained_power_min({1.0, 0.0}, 1.0), Error); }

TEST(PowerMinProperty, BeatsRandomFeasiblePoints) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const int K = 1 + trial % 6;
    std::vector<double> mu(K);
    for (double& m : mu) m = u(rng);
    const double beta = 0.25 + 0.25 * (trial % 8);
    auto r = constrained_power_min(mu, beta);
    EXPECT_LT(r.stationarity, 1e-10);
    double c = 0.0;
    for (int h = 0; h < K; ++h) c += mu[h] * r.s[h];
    EXPECT_NEAR(c, 1.0, 1e-12);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> s(K);
      for (double& v : s) v = u(rng);
      EXPECT_GE(power_ratio(mu, s, beta), r.value * (1 - 1e-12));
    }
  }
}

TEST(Rayleigh, WindingOneCircle) {
  for (int n : {2, 3, 5, 9}) {
    SystemParams p{n, 2, 1.0, 0.0};
    for (double R : {0.3, 2.0}) EXPECT_NEAR(rayleigh_quotient(circle_loop(2, 3, R, 1), p), pi / n, 1e-12);
  }
}

TEST(Rayleigh, WindingTwoMatchesBranch) {
  for (int n : {3, 5, 7}) {
    SystemParams p{n, 2, 1.0, 0.0};
    const auto s = circulant_spectrum(n, 1.0);
    // lambda_2 = 4 / delta_2 and J = lambda / (2 n) on the l = 2 branch
    const double expect = 4.0 / s.delta(2) / (2.0 * n);
    EXPECT_NEAR(rayleigh_quotient(circle_loop(2, 3, 1.0, 2), p), expect, 1e-12);
    const auto ls = admissible_lambdas(s, 0.0, -1, 1);
    for (const auto& b : ls)
      if (b.frequency == 2) EXPECT_NEAR(b.lambda, 4.0 / s.delta(2), 1e-12);
  }
}

TEST(RayleighProperty, RandomLoops) {
  SystemParams p{5, 2, 1.0, 0.0};
  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    auto x = random_loop(2, 6, rng);
    EXPECT_GE(rayleigh_quotient(x, p), pi / 5 - 1e-10);
  }
}

TEST(Chain, LagrangeCircleEquality) {
  SystemParams p{3, 2, 1.0, 0.0};
  auto r = bound_chain(circle_loop(2, 3, std::pow(3.0, -1.0 / 6.0), 1), p);
  const double v = std::pow(3.0, 2.0 / 3.0) * pi;
  EXPECT_NEAR(r.A, v, 1e-12);
  EXPECT_NEAR(r.A_tilde, v, 1e-12);
  EXPECT_NEAR(r.A_bar_oracle, v, 1e-12);
  EXPECT_GT(r.A_bar_paper, r.A);
}

TEST(Chain, UnitCircleEquality) {
  SystemParams p{3, 2, 1.0, 0.0};
  auto r = bound_chain(circle_loop(2, 3, 1.0, 1), p);
  const double v = pi + two_pi / std::sqrt(3.0);
  EXPECT_NEAR(r.A, v, 1e-12);
  EXPECT_NEAR(r.A_bar_oracle, v, 1e-12);
  EXPECT_GT(r.A, std::pow(3.0, 2.0 / 3.0) * pi);
}

TEST(ChainProperty, OrderingOnRandomLoops) {
  Rng rng(5);
  int checked = 0;
  for (int n : {2, 3, 5, 8}) {
    for (double a : {0.5, 1.0, 2.0}) {
      SystemParams p{n, 2 + (n % 2), a, 0.0};
      for (int i = 0; i < 60; ++i) {
        auto x = random_loop(p.d, 5, rng);
        try {
          auto r = bound_chain(x, p);
          EXPECT_GE(r.slack_tilde, -1e-10);
          EXPECT_GE(r.slack_bar, -1e-10);
          for (double xi : r.xi) EXPECT_GT(xi, 0.0);
          ++checked;
        } catch (const CollisionError&) {
        }
      }
    }
  }
  EXPECT_GT(checked, 600);
}

TEST(ChainProperty, EqualityOnlyOnCircles) {
  Rng rng(6);
  for (int n : {3, 4}) {
    SystemParams p{n, 2, 1.0, 0.0};
    for (double R : {0.5, 1.0, 1.7}) {
      auto c = circle_loop(2, 4, R, -1);
      auto r = bound_chain(c, p);
      EXPECT_LT(std::max(std::abs(r.slack_tilde), std::abs(r.slack_bar)), 1e-9);
      auto d = diagnostics(c, p);
      EXPECT_LT(d.radius_fit.rms, 1e-6);
      auto noisy = c;
      add_noise(noisy, rng, 0.02);
      auto rn = bound_chain(noisy, p);
      EXPECT_GT(std::max(rn.slack_tilde, rn.slack_bar), 1e-9);
    }
  }
}
