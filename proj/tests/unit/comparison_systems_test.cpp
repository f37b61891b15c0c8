#include <gtest/gtest.h>

#include "fixtures.hpp"

namespace mmq {
namespace {

using testing::mp2;
using testing::mp2_q_star;
using testing::random_vector;

struct Case {
  GameSpec g;
  SamplingModel m;
  Occupation occ;
  QTable q_star;
};

Case random_setup(std::uint64_t seed, double gamma = 0.9, Dims dims = {2, 2, 3}) {
  Case s;
  s.g = generate_random_game(dims, gamma, seed);
  s.m = generate_random_sampling(dims, seed + 1000);
  s.occ = occupation_frequency(s.m);
  s.q_star = solve_optimal_q(s.g, 1e-13).q_star;
  return s;
}

TEST(ComparisonSystems, EquilibriumAtZero) {
  const Case s = random_setup(1);
  const ComparisonContext ctx(s.g, s.occ.d, 0.2, s.q_star);
  Vector x = Vector::Zero(s.g.dims.n());
  const Vector w = Vector::Zero(s.g.dims.n());
  for (int k = 0; k < 10; ++k) {
    EXPECT_EQ(step_lower(ctx, x, w), x);
    EXPECT_EQ(step_upper(ctx, x, w), x);
    EXPECT_EQ(step_linear(ctx, x, w), x);
  }
}

TEST(ComparisonSystems, NoiseFreeStepsContract) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 40; ++trial) {
    const Case s = random_setup(100 + trial, 0.5 + 0.01 * trial);
    const double alpha = 0.05 + 0.02 * trial;
    const ComparisonContext ctx(s.g, s.occ.d, alpha, s.q_star);
    const double rho = decay_rate(alpha, s.occ.d_min, s.g.discount);
    const Vector w = Vector::Zero(s.g.dims.n());
    const Vector x = random_vector(s.g.dims.n(), rng, -3.0, 3.0);
    const double nx = x.lpNorm<Eigen::Infinity>();
    ASSERT_LE(step_lower(ctx, x, w).lpNorm<Eigen::Infinity>(), rho * nx + 1e-13);
    ASSERT_LE(step_upper(ctx, x, w).lpNorm<Eigen::Infinity>(), rho * nx + 1e-13);
    ASSERT_LE(step_linear(ctx, x, w).lpNorm<Eigen::Infinity>(), rho * nx + 1e-13);
  }
}

TEST(ComparisonSystems, LinearStepMatchesMatrix) {
  std::mt19937_64 rng(3);
  const Case s = random_setup(3);
  const ComparisonContext ctx(s.g, s.occ.d, 0.3, s.q_star);
  const Matrix A = ctx.linear_matrix();
  for (int trial = 0; trial < 20; ++trial) {
    const Vector x = random_vector(12, rng);
    const Vector w = random_vector(12, rng);
    ASSERT_LE((step_linear(ctx, x, w) - (A * x + 0.3 * w)).lpNorm<Eigen::Infinity>(), 1e-14);
  }
}

TEST(ComparisonSystems, LinearNormEqualsRateForUniformSampling) {
  for (int seed = 0; seed < 10; ++seed) {
    const GameSpec g = generate_random_game({2, 3, 2}, 0.8, seed);
    const SamplingModel m = uniform_sampling(g.dims);
    const Occupation occ = occupation_frequency(m);
    const QTable q_star = solve_optimal_q(g, 1e-12).q_star;
    const ComparisonContext ctx(g, occ.d, 0.25, q_star);
    EXPECT_NEAR(infinity_norm(ctx.linear_matrix()), decay_rate(0.25, occ.d_min, 0.8), 1e-14);
  }
}

TEST(ComparisonSystems, AbsoluteFormsAgreeWithDifferences) {
  std::mt19937_64 rng(4);
  const Case s = random_setup(4);
  const ComparisonContext ctx(s.g, s.occ.d, 0.1, s.q_star);
  const Vector x = random_vector(12, rng);
  const Vector w = random_vector(12, rng);
  const QTable low = step_lower(QTable(s.q_star + x), s.q_star, w, s.g, s.m, 0.1);
  const QTable up = step_upper(QTable(s.q_star + x), s.q_star, w, s.g, s.m, 0.1);
  EXPECT_LE((low - s.q_star - step_lower(ctx, x, w)).lpNorm<Eigen::Infinity>(), 1e-14);
  EXPECT_LE((up - s.q_star - step_upper(ctx, x, w)).lpNorm<Eigen::Infinity>(), 1e-14);
}

TEST(ComparisonSystems, SelectionsSandwichTrueIncrement) {
  // lower(x) <= v(Q* + x) - v(Q*) <= upper(x), per state.
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Case s = random_setup(200 + trial, 0.7, {3, 2, 3});
    const ComparisonContext ctx(s.g, s.occ.d, 0.1, s.q_star);
    const Vector x = random_vector(s.g.dims.n(), rng, -2.0, 2.0);
    const Vector inc = maxmin_values(s.q_star + x, s.g.dims) - maxmin_values(s.q_star, s.g.dims);
    ASSERT_TRUE(((ctx.lower_selection(x) - inc).array() <= 1e-12).all());
    ASSERT_TRUE(((inc - ctx.upper_selection(x)).array() <= 1e-12).all());
  }
}

TEST(CoupledRun, OrderingHoldsOnEveryStep) {
  for (int trial = 0; trial < 6; ++trial) {
    const Case s = trial == 0 ? Case{mp2(), uniform_sampling(mp2().dims),
                                       occupation_frequency(uniform_sampling(mp2().dims)), mp2_q_star()}
                               : random_setup(300 + trial);
    const CoupledTrajectory t =
        run_coupled(s.g, s.m, 0.1, 3000, trial, QTable::Zero(s.g.dims.n()), s.q_star);
    EXPECT_EQ(t.summary.total_order_violations(), 0) << "gap " << t.summary.max_order_gap;
    EXPECT_EQ(t.summary.bound_violations, 0);
    for (int v : t.order_violations) EXPECT_EQ(v, 0);
  }
}

TEST(CoupledRun, IdentitiesAndNormBounds) {
  for (int trial = 0; trial < 4; ++trial) {
    const Case s = random_setup(400 + trial);
    CoupledOptions opt;
    opt.check_identities = true;
    const CoupledTrajectory t =
        run_coupled(s.g, s.m, 0.2, 400, trial, QTable::Zero(s.g.dims.n()), s.q_star, opt);
    const CoupledSummary& sum = t.summary;
    EXPECT_LE(sum.max_original_form_residual, 1e-12);
    EXPECT_LE(sum.max_linear_residual, 1e-12);
    EXPECT_LE(sum.max_error_residual_lower, 1e-12);
    EXPECT_LE(sum.max_error_residual_upper, 1e-12);
    EXPECT_LE(sum.max_A_norm_excess, 1e-14);
    EXPECT_LE(sum.max_B_norm_excess, 1e-14);
  }
}

TEST(CoupledRun, SharedNoiseRecorded) {
  const Case s = random_setup(5);
  CoupledOptions opt;
  opt.record_iterates = true;
  opt.stride = 1;
  const CoupledTrajectory t = run_coupled(s.g, s.m, 0.1, 50, 9, QTable::Zero(12), s.q_star, opt);
  ASSERT_EQ(t.states.size(), 51u);
  ASSERT_EQ(t.noise.size(), 51u);
  const ComparisonContext ctx(s.g, s.occ.d, 0.1, s.q_star);
  for (std::size_t k = 1; k < t.states.size(); ++k) {
    const Vector xl = t.states[k - 1].q_low - s.q_star;
    const Vector want = step_lower(ctx, xl, t.noise[k]);
    ASSERT_LE((t.states[k].q_low - s.q_star - want).lpNorm<Eigen::Infinity>(), 1e-13);
  }
  // The original iterate matches a plain Q-learning run with the same seed.
  const LearningTrace plain = run_q_learning(s.g, s.m, 0.1, 50, 9, QTable::Zero(12));
  EXPECT_EQ(plain.final_q, t.states.back().q);
}

TEST(CoupledRun, StrideAndDeterminism) {
  const Case s = random_setup(6);
  CoupledOptions opt;
  opt.stride = 10;
  const CoupledTrajectory a = run_coupled(s.g, s.m, 0.1, 95, 3, QTable::Zero(12), s.q_star, opt);
  const CoupledTrajectory b = run_coupled(s.g, s.m, 0.1, 95, 3, QTable::Zero(12), s.q_star, opt);
  ASSERT_EQ(a.steps.size(), 11u);
  EXPECT_EQ(a.steps.back(), 95);
  for (std::size_t i = 0; i < a.errors.size(); ++i) EXPECT_EQ(a.errors[i].orig_inf, b.errors[i].orig_inf);
}

TEST(CoupledRun, DegenerateGameAllSystemsCoincide) {
  // One action each: every selection is the identity, so all five agree.
  const Case s = random_setup(7, 0.8, {1, 1, 3});
  const CoupledTrajectory t = run_coupled(s.g, s.m, 0.3, 500, 4, QTable::Zero(3), s.q_star);
  for (const ErrorNorms& e : t.errors) {
    ASSERT_NEAR(e.low_inf, e.orig_inf, 1e-12);
    ASSERT_NEAR(e.up_inf, e.orig_inf, 1e-12);
    ASSERT_NEAR(e.lu_inf, e.orig_inf, 1e-12);
    ASSERT_NEAR(e.ul_inf, e.orig_inf, 1e-12);
  }
}

TEST(CoupledRun, InputChecks) {
  const Case s = random_setup(8);
  EXPECT_THROW(run_coupled(s.g, s.m, 1.5, 10, 1, QTable::Zero(12), s.q_star), ParameterError);
  EXPECT_THROW(run_coupled(s.g, s.m, 0.1, 10, 1, QTable::Zero(11), s.q_star), DimensionError);
  EXPECT_THROW(run_coupled(s.g, s.m, 0.1, 10, 1, QTable::Constant(12, 2.0), s.q_star), AssumptionViolation);
}

}  // namespace
}  // namespace mmq
