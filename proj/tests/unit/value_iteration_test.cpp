#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace mmq {
namespace {

using testing::mp2;
using testing::mp2_q_star;
using testing::random_vector;

TEST(QviStep, Mp2FromReward) {
  // maxmin(R) = max(min(1,-1), min(-1,1)) = -1, so Q1 = R - 0.5.
  const GameSpec g = mp2();
  const QTable q1 = qvi_step(g.reward, g);
  QTable want(4);
  want << 0.5, -1.5, -1.5, 0.5;
  EXPECT_TRUE(q1.isApprox(want, 1e-15));
}

TEST(QviStep, FixedPoint) { EXPECT_TRUE(qvi_step(mp2_q_star(), mp2()).isApprox(mp2_q_star(), 1e-15)); }

TEST(QviStep, ContractsTowardOptimum) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const GameSpec g = generate_random_game({2, 2, 3}, 0.9, 200 + trial);
    const QTable q_star = solve_optimal_q(g, 1e-12).q_star;
    const Vector q = random_vector(12, rng, -5.0, 5.0);
    EXPECT_LE((qvi_step(q, g) - q_star).lpNorm<Eigen::Infinity>(),
              g.discount * (q - q_star).lpNorm<Eigen::Infinity>() + 1e-11);
  }
}

TEST(SolveOptimalQ, Mp2Analytic) {
  const ViResult r = solve_optimal_q(mp2(), 1e-12);
  EXPECT_LE((r.q_star - mp2_q_star()).lpNorm<Eigen::Infinity>(), 1e-12);
  EXPECT_LE(r.error_certificate, 1e-12);
  EXPECT_NEAR(r.error_certificate, r.residual * 0.5 / 0.5, 1e-30);
}

TEST(SolveOptimalQ, ZeroDiscountIsOneStep) {
  const GameSpec g = mp2(0.0);
  const ViResult r = solve_optimal_q(g, 1e-9);
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.q_star, g.reward);
  EXPECT_EQ(r.error_certificate, 0.0);
}

TEST(SolveOptimalQ, ResidualRecheck) {
  for (int seed = 0; seed < 20; ++seed) {
    const GameSpec g = generate_random_game({2, 2, 3}, 0.85, seed);
    const double tol = 1e-10;
    const ViResult r = solve_optimal_q(g, tol);
    const double threshold = tol * (1.0 - g.discount) / g.discount;
    EXPECT_LE(r.residual, threshold);
    EXPECT_LE((bellman_operator(r.q_star, g) - r.q_star).lpNorm<Eigen::Infinity>(), threshold);
    EXPECT_NEAR(r.error_certificate, r.residual * g.discount / (1.0 - g.discount), 1e-25);
  }
}

TEST(SolveOptimalQ, DeterministicAndRejectsBadTolerance) {
  const GameSpec g = generate_random_game({3, 2, 3}, 0.95, 3);
  const ViResult a = solve_optimal_q(g, 1e-11);
  const ViResult b = solve_optimal_q(g, 1e-11);
  EXPECT_EQ(a.q_star, b.q_star);
  EXPECT_EQ(a.iterations, b.iterations);
  EXPECT_THROW(solve_optimal_q(g, 0.0), ParameterError);
}

TEST(SolveOptimalQ, GeometricDecayAlongRun) {
  for (double gamma : {0.5, 0.9}) {
    for (int seed = 0; seed < 10; ++seed) {
      const GameSpec g = generate_random_game({2, 2, 3}, gamma, 300 + seed);
      std::vector<QTable> iterates;
      const ViResult r = solve_optimal_q(g, 1e-12, [&](int, const QTable& q) { iterates.push_back(q); });
      ASSERT_EQ(static_cast<int>(iterates.size()), r.iterations + 1);
      const double e0 = (iterates[0] - r.q_star).lpNorm<Eigen::Infinity>();
      for (std::size_t k = 0; k < iterates.size(); ++k) {
        ASSERT_LE((iterates[k] - r.q_star).lpNorm<Eigen::Infinity>(),
                  std::pow(gamma, static_cast<double>(k)) * e0 + 1e-10);
      }
    }
  }
}

TEST(GreedyPolicies, Mp2) {
  const GreedyPolicies p = greedy_policies(mp2_q_star(), mp2().dims);
  EXPECT_EQ(p.pi[0], 0);
  EXPECT_EQ(p.mu[0][0], 1);
  EXPECT_EQ(p.mu[0][1], 0);
}

TEST(GreedyPolicies, ConstantTable) {
  const Dims d{3, 3, 2};
  const GreedyPolicies p = greedy_policies(QTable::Constant(d.n(), -0.4), d);
  for (int s = 0; s < d.states; ++s) {
    EXPECT_EQ(p.pi[s], 0);
    for (int a = 0; a < d.actions_user; ++a) EXPECT_EQ(p.mu[s][a], 0);
  }
}

TEST(GreedyPolicies, ShiftInvariant) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> shift(-10.0, 10.0);
  const Dims d{3, 4, 3};
  for (int trial = 0; trial < 50; ++trial) {
    // Values on a coarse grid so that adding c cannot reorder entries by rounding.
    Vector q(d.n());
    for (int i = 0; i < d.n(); ++i) q[i] = std::floor(random_vector(1, rng, 0.0, 8.0)[0]) * 0.25;
    const double c = std::round(shift(rng) * 4.0) / 4.0;
    const GreedyPolicies p1 = greedy_policies(q, d);
    const GreedyPolicies p2 = greedy_policies(q + Vector::Constant(d.n(), c), d);
    EXPECT_EQ(p1.pi, p2.pi);
    EXPECT_EQ(p1.mu, p2.mu);
  }
}

TEST(Sandwich, ZeroAtOptimum) {
  const SandwichCheck c = vi_sandwich_check(mp2_q_star(), mp2_q_star(), mp2());
  EXPECT_TRUE(c.holds);
  EXPECT_EQ(c.lower.lpNorm<Eigen::Infinity>(), 0.0);
  EXPECT_EQ(c.upper.lpNorm<Eigen::Infinity>(), 0.0);
}

TEST(Sandwich, HoldsOnRandomPairs) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 500; ++trial) {
    const GameSpec g = trial % 5 == 0 ? mp2(0.5 + 0.0008 * trial)
                                      : generate_random_game({2, 3, 3}, 0.2 + 0.0015 * trial, 400 + trial);
    const QTable q_star = solve_optimal_q(g, 1e-12).q_star;
    const Vector qk = random_vector(g.dims.n(), rng, -4.0, 4.0);
    const SandwichCheck c = vi_sandwich_check(qk, q_star, g);
    ASSERT_TRUE(c.holds) << "trial " << trial;
    ASSERT_TRUE(((c.lower - c.upper).array() <= 1e-12).all());
  }
}

}  // namespace
}  // namespace mmq
