#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"

namespace mmq {
namespace {

using testing::mp2;

ExperimentConfig mp2_config(int trials, std::int64_t steps) {
  ExperimentConfig cfg;
  cfg.game_path = std::filesystem::path(MMQ_GAMES_DIR) / "mp2.json";
  cfg.alpha = 0.05;
  cfg.steps = steps;
  cfg.trials = trials;
  cfg.base_seed = 7;
  cfg.stride = 10;
  return cfg;
}

std::string csv_of(const RunRecord& rec) {
  std::ostringstream os;
  write_csv(rec, os);
  return os.str();
}

TEST(Experiment, IdenticalConfigGivesIdenticalCsv) {
  ExperimentConfig cfg = mp2_config(6, 500);
  cfg.threads = 3;
  const std::string a = csv_of(run_experiment(cfg));
  cfg.threads = 1;
  const std::string b = csv_of(run_experiment(cfg));
  EXPECT_EQ(a, b);
}

TEST(Experiment, SingleTrialEqualsTrajectory) {
  const ExperimentConfig cfg = mp2_config(1, 300);
  const RunRecord rec = run_experiment(cfg);
  CoupledOptions opt;
  opt.stride = cfg.stride;
  const CoupledTrajectory t = run_coupled(mp2(), uniform_sampling(mp2().dims), cfg.alpha, cfg.steps,
                                          derive_seed(cfg.base_seed, 0), QTable::Zero(4), rec.q_star, opt);
  ASSERT_EQ(rec.steps, t.steps);
  for (std::size_t i = 0; i < t.errors.size(); ++i) {
    EXPECT_EQ(rec.orig_inf.mean[i], t.errors[i].orig_inf);
    EXPECT_EQ(rec.lu_2.mean[i], t.errors[i].lu_2);
    EXPECT_EQ(rec.up_inf.max[i], t.errors[i].up_inf);
  }
}

TEST(Experiment, Mp2HasNoOrderingViolations) {
  const RunRecord rec = run_experiment(mp2_config(10, 2000));
  for (auto v : rec.relation_violations) EXPECT_EQ(v, 0);
  for (auto v : rec.order_violations) EXPECT_EQ(v, 0);
  EXPECT_EQ(rec.bound_violations_lemma, 0);
  EXPECT_TRUE(rec.passed()) << (rec.diagnostics.empty() ? "" : rec.diagnostics.front());
}

TEST(Experiment, SeedsArePureFunctionOfBase) {
  const RunRecord rec = run_experiment(mp2_config(4, 10));
  ASSERT_EQ(rec.seeds.size(), 4u);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(rec.seeds[i], derive_seed(7, i));
  EXPECT_NE(rec.seeds[0], rec.seeds[1]);
}

TEST(Experiment, CsvHeaderIsStable) {
  const std::string csv = csv_of(run_experiment(mp2_config(1, 20)));
  const std::string first = csv.substr(0, csv.find('\n'));
  EXPECT_EQ(first,
            "k,err_orig_inf,err_orig_2,err_L_inf,err_U_inf,err_LU_2,err_UL_2,bound_thm1,bound_thm2,"
            "bound_cor1_eq4,bound_cor1_eq5,bound_thm4,bound_thm5,order_violations");
  // header + k = 0, 10, 20
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
}

TEST(Experiment, DegenerateGameMatchesClosedForm) {
  // One state, one action each, reward r: Q_k - Q* = rho^k (0 - r/(1-gamma)) exactly
  // in distribution, since every sample is the same.
  GameSpec g;
  g.dims = {1, 1, 1};
  g.transition = Matrix::Ones(1, 1);
  g.reward = Vector::Constant(1, 0.6);
  g.discount = 0.75;
  GameDocument doc{g, std::nullopt};
  ExperimentConfig cfg;
  cfg.generator = GeneratorSource{{1, 1, 1}, 0.75, 0};  // satisfies validate(); doc is used directly
  cfg.alpha = 0.2;
  cfg.steps = 40;
  cfg.trials = 3;
  cfg.stride = 5;
  const RunRecord rec = run_experiment(cfg, doc);
  const double rho = 1.0 - 0.2 * 0.25;
  const double x0 = 0.6 / 0.25;
  for (std::size_t i = 0; i < rec.steps.size(); ++i) {
    const double want = x0 * std::pow(rho, static_cast<double>(rec.steps[i]));
    EXPECT_NEAR(rec.orig_inf.mean[i], want, 1e-12);
    EXPECT_NEAR(rec.low_inf.mean[i], want, 1e-12);
    EXPECT_NEAR(rec.ul_2.mean[i], want, 1e-12);
  }
}

TEST(Experiment, BadConfigsRejected) {
  ExperimentConfig cfg = mp2_config(0, 10);
  EXPECT_THROW(run_experiment(cfg), ParameterError);
  cfg = mp2_config(1, 10);
  cfg.alpha = 1.5;
  EXPECT_THROW(run_experiment(cfg), ParameterError);
  cfg = mp2_config(1, 10);
  cfg.generator = GeneratorSource{{2, 2, 2}, 0.5, 1};
  EXPECT_THROW(run_experiment(cfg), ParameterError);
}

TEST(Experiment, WriteRunEmitsSidecar) {
  const RunRecord rec = run_experiment(mp2_config(2, 30));
  const auto path = std::filesystem::temp_directory_path() / "mmq_experiment_run.csv";
  write_run(rec, path);
  std::ifstream meta(path.string() + ".meta.json");
  ASSERT_TRUE(meta.good());
  const nlohmann::json j = nlohmann::json::parse(meta);
  EXPECT_EQ(j["rng"], "mt19937_64");
  EXPECT_EQ(j["bound_variant"], "printed");
  EXPECT_EQ(j["seeds"].size(), 2u);
  EXPECT_EQ(j["tool_version"], std::string(kToolVersion));
  EXPECT_TRUE(j.contains("config_hash"));
}

TEST(Experiment, FormatNumberKeepsPrecision) {
  const double v = 0.1234567890123456;
  EXPECT_EQ(std::stod(format_number(v)), v);
}

}  // namespace
}  // namespace mmq
