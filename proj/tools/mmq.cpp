// Command-line driver for the minimax Q-learning toolkit.
//
//   mmq generate --dims 2,2,3 --gamma 0.8 --seed 1 --out game.json
//   mmq solve    --game game.json --tol 1e-12
//   mmq learn    --game game.json --alpha 0.05 --steps 20000 --seed 3 --out learn.csv
//   mmq verify   --game game.json --alpha 0.05 --steps 10000 --trials 100 --seed 7 --out run.csv
//   mmq bounds   --game game.json --alpha 0.05 --k-max 10000 --k-step 100
//
// Exit codes: 0 success, 1 invariant or bound violation, 2 usage error.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mmq/mmq.hpp"

namespace {

constexpr int kExitViolation = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

const CLI::Validator kOpenUnit(
    [](const std::string& text) -> std::string {
      double v = 0.0;
      if (!CLI::detail::lexical_cast(text, v) || !(v > 0.0 && v < 1.0)) {
        return "value must lie in (0, 1), got " + text;
      }
      return {};
    },
    "(0,1)");

const CLI::Validator kDiscount(
    [](const std::string& text) -> std::string {
      double v = 0.0;
      if (!CLI::detail::lexical_cast(text, v) || !(v >= 0.0 && v < 1.0)) {
        return "value must lie in [0, 1), got " + text;
      }
      return {};
    },
    "[0,1)");

// Relative output paths land in $MMQ_OUTPUT_DIR when it is set.
std::filesystem::path output_path(const std::string& raw) {
  std::filesystem::path p(raw);
  if (p.is_relative()) {
    if (const char* dir = std::getenv("MMQ_OUTPUT_DIR"); dir != nullptr && *dir != '\0') {
      p = std::filesystem::path(dir) / p;
    }
  }
  return p;
}

mmq::Dims parse_dims(const std::vector<int>& v) {
  if (v.size() != 3) throw UsageError("--dims takes three integers A,B,S");
  mmq::Dims d{v[0], v[1], v[2]};
  mmq::check_dims(d);
  return d;
}

// Options naming where a game comes from, shared by several subcommands.
struct GameOptions {
  std::string game_path;
  std::vector<int> dims;
  double gamma = 0.9;
  std::uint64_t game_seed = 0;
  std::optional<double> gamma_override;

  void attach(CLI::App* cmd) {
    auto* g = cmd->add_option("--game", game_path, "game JSON document");
    auto* d = cmd->add_option("--dims", dims, "generate a random game with |A|,|B|,|S|")->delimiter(',');
    g->excludes(d);
    cmd->add_option("--game-seed", game_seed, "seed of the generated game");
    cmd->add_option("--game-gamma", gamma, "discount of the generated game")->check(kDiscount);
    cmd->add_option("--gamma", gamma_override, "override the game's discount")->check(kDiscount);
  }

  void fill(mmq::ExperimentConfig& cfg) const {
    if (!game_path.empty()) {
      cfg.game_path = game_path;
    } else if (!dims.empty()) {
      cfg.generator = mmq::GeneratorSource{parse_dims(dims), gamma, game_seed};
    } else {
      throw UsageError("one of --game or --dims is required");
    }
    cfg.gamma_override = gamma_override;
  }

  mmq::GameDocument resolve() const {
    mmq::ExperimentConfig cfg;
    fill(cfg);
    return mmq::resolve_game(cfg);
  }
};

void print_vector(std::ostream& os, const char* name, const mmq::Vector& v) {
  os << name << " =";
  for (Eigen::Index i = 0; i < v.size(); ++i) os << ' ' << mmq::format_number(v[i]);
  os << '\n';
}

int run_solve(const GameOptions& game, double tol) {
  const mmq::GameDocument doc = game.resolve();
  const mmq::ViResult res = mmq::solve_optimal_q(doc.spec, tol);
  const auto policies = mmq::greedy_policies(res.q_star, doc.spec.dims);
  std::cout << "iterations = " << res.iterations << '\n'
            << "residual = " << mmq::format_number(res.residual) << '\n'
            << "error_certificate = " << mmq::format_number(res.error_certificate) << '\n';
  print_vector(std::cout, "q_star", res.q_star);
  std::cout << "pi =";
  for (int a : policies.pi) std::cout << ' ' << a;
  std::cout << '\n';
  for (int s = 0; s < doc.spec.dims.states; ++s) {
    std::cout << "mu[s=" << s << "] =";
    for (int b : policies.mu[s]) std::cout << ' ' << b;
    std::cout << '\n';
  }
  return 0;
}

int run_learn(const GameOptions& game, double alpha, std::int64_t steps, std::uint64_t seed, int stride,
              const std::string& out) {
  const mmq::GameDocument doc = game.resolve();
  const mmq::QTable q0 = mmq::QTable::Zero(doc.spec.dims.n());
  const mmq::QTable q_star = mmq::solve_optimal_q(doc.spec, 1e-12).q_star;
  const auto trace = mmq::run_q_learning(doc.spec, *doc.sampling, alpha, steps, seed, q0, stride);
  if (!out.empty()) {
    std::ofstream os(output_path(out));
    if (!os) throw std::runtime_error("cannot write " + out);
    os << "k,err_inf,err_2,norm_inf\n";
    for (std::size_t i = 0; i < trace.steps.size(); ++i) {
      const mmq::Vector diff = trace.snapshots[i] - q_star;
      os << trace.steps[i] << ',' << mmq::format_number(diff.lpNorm<Eigen::Infinity>()) << ','
         << mmq::format_number(diff.norm()) << ','
         << mmq::format_number(trace.snapshots[i].lpNorm<Eigen::Infinity>()) << '\n';
    }
  }
  std::cout << "rng = " << mmq::kRngName << '\n';
  print_vector(std::cout, "q_final", trace.final_q);
  std::cout << "err_inf = " << mmq::format_number((trace.final_q - q_star).lpNorm<Eigen::Infinity>()) << '\n'
            << "max_norm = " << mmq::format_number(trace.max_norm) << " (q_max "
            << mmq::format_number(trace.q_max) << ")\n";
  if (trace.bound_violations > 0) {
    std::cerr << "boundedness_violation count=" << trace.bound_violations << '\n';
    return kExitViolation;
  }
  return 0;
}

int run_verify(mmq::ExperimentConfig cfg, const GameOptions& game, const std::string& out) {
  game.fill(cfg);
  if (!out.empty()) cfg.out = output_path(out);
  const mmq::RunRecord rec = mmq::run_experiment(cfg);
  if (cfg.out) {
    mmq::write_run(rec, *cfg.out);
  } else {
    mmq::write_csv(rec, std::cout);
  }
  std::cerr << "trials=" << cfg.trials << " steps=" << cfg.steps << " rho=" << mmq::format_number(rec.params.rho)
            << '\n';
  for (int r = 0; r < mmq::kRelationCount; ++r) {
    std::cerr << "order " << mmq::kRelationNames[r] << " violations=" << rec.relation_violations[r] << '\n';
  }
  for (const auto& b : rec.bound_checks) {
    std::cerr << "bound " << mmq::to_string(b.which) << " min_margin=" << mmq::format_number(b.min_margin())
              << " violations=" << b.violations.size() << '\n';
  }
  for (const auto& d : rec.diagnostics) std::cerr << "VIOLATION " << d << '\n';
  std::cerr << (rec.passed() ? "PASS" : "FAIL") << '\n';
  return rec.passed() ? 0 : kExitViolation;
}

int run_bounds(const GameOptions& game, double alpha, std::int64_t k_max, std::int64_t k_step,
               mmq::ExponentVariant variant, const std::string& out) {
  const mmq::GameDocument doc = game.resolve();
  const mmq::Occupation occ = mmq::occupation_frequency(*doc.sampling);
  const mmq::QTable q_star = mmq::solve_optimal_q(doc.spec, 1e-12).q_star;
  const auto params = mmq::BoundParams::make(alpha, doc.spec.discount, occ.d_min, occ.d_max, doc.spec.dims.n(),
                                             0.0, q_star.norm(), q_star.lpNorm<Eigen::Infinity>(), variant);
  std::ofstream file;
  if (!out.empty()) {
    file.open(output_path(out));
    if (!file) throw std::runtime_error("cannot write " + out);
  }
  std::ostream& os = out.empty() ? std::cout : file;
  os << "k";
  for (auto id : mmq::kAllBounds) os << ',' << mmq::to_string(id);
  os << '\n';
  for (std::int64_t k = 0; k <= k_max; k += k_step) {
    os << k;
    for (auto id : mmq::kAllBounds) os << ',' << mmq::format_number(mmq::evaluate_bound(id, k, params));
    os << '\n';
  }
  std::cerr << "rho = " << mmq::format_number(params.rho) << " d_min = " << mmq::format_number(params.d_min)
            << " d_max = " << mmq::format_number(params.d_max) << " n = " << params.n << '\n';
  return 0;
}

int run_generate(const std::vector<int>& dims, double gamma, std::uint64_t seed, const std::string& sampling,
                 const std::string& out) {
  const mmq::Dims d = parse_dims(dims);
  const mmq::GameSpec spec = mmq::generate_random_game(d, gamma, seed);
  std::optional<mmq::SamplingModel> model;
  if (sampling == "uniform") {
    model = mmq::uniform_sampling(d);
  } else if (sampling == "random") {
    model = mmq::generate_random_sampling(d, mmq::splitmix64(seed));
  }
  if (out.empty()) {
    std::cout << mmq::game_to_json(spec, model).dump(2) << '\n';
  } else {
    mmq::save_game(spec, output_path(out), model);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimax Q-learning solver and finite-time bound verifier"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mmq::kToolVersion));

  GameOptions game;

  auto* solve = app.add_subcommand("solve", "compute Q* by Q-value iteration");
  double tol = 1e-12;
  game.attach(solve);
  solve->add_option("--tol", tol, "error certificate target")->check(CLI::PositiveNumber);

  auto* learn = app.add_subcommand("learn", "run minimax Q-learning once");
  double alpha = 0.05;
  std::int64_t steps = 10000;
  std::uint64_t seed = 0;
  int stride = 0;
  std::string out;
  game.attach(learn);
  learn->add_option("--alpha", alpha, "constant step size")->check(kOpenUnit);
  learn->add_option("--steps", steps, "number of updates")->check(CLI::NonNegativeNumber);
  learn->add_option("--seed", seed, "sampler seed");
  learn->add_option("--stride", stride, "snapshot stride (0 = default)")->check(CLI::NonNegativeNumber);
  learn->add_option("--out", out, "CSV of error norms");

  auto* verify = app.add_subcommand("verify", "coupled comparison-system run with bound certification");
  mmq::ExperimentConfig cfg;
  std::string variant = "printed";
  game.attach(verify);
  verify->add_option("--alpha", cfg.alpha, "constant step size")->check(kOpenUnit);
  verify->add_option("--steps", cfg.steps, "updates per trial")->check(CLI::NonNegativeNumber);
  verify->add_option("--trials", cfg.trials, "independent trials")->check(CLI::PositiveNumber);
  verify->add_option("--seed", cfg.base_seed, "base seed; trial seeds derive from it");
  verify->add_option("--stride", cfg.stride, "record every stride-th step")->check(CLI::PositiveNumber);
  verify->add_option("--out", out, "CSV path (metadata goes to <out>.meta.json)");
  verify->add_option("--variant", variant, "bound exponent variant")
      ->check(CLI::IsMember({"printed", "three_halves"}));
  verify->add_option("--order-tol", cfg.order_tol, "ordering tolerance")->check(CLI::NonNegativeNumber);
  verify->add_option("--identity-tol", cfg.identity_tol, "algebraic identity tolerance")
      ->check(CLI::NonNegativeNumber);
  verify->add_option("--bound-tol", cfg.bound_tol, "allowed excess of an empirical mean over its bound")
      ->check(CLI::NonNegativeNumber);
  verify->add_flag("--check-identities", cfg.check_identities, "evaluate matrix forms every step");
  verify->add_option("--threads", cfg.threads, "worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);

  auto* bounds = app.add_subcommand("bounds", "evaluate the finite-time bounds without simulation");
  std::int64_t k_max = 10000;
  std::int64_t k_step = 100;
  game.attach(bounds);
  bounds->add_option("--alpha", alpha, "constant step size")->check(kOpenUnit);
  bounds->add_option("--k-max", k_max, "last k")->check(CLI::NonNegativeNumber);
  bounds->add_option("--k-step", k_step, "k spacing")->check(CLI::PositiveNumber);
  bounds->add_option("--variant", variant, "bound exponent variant")
      ->check(CLI::IsMember({"printed", "three_halves"}));
  bounds->add_option("--out", out, "CSV path (default stdout)");

  auto* generate = app.add_subcommand("generate", "write a random game document");
  std::vector<int> gen_dims;
  double gen_gamma = 0.9;
  std::string sampling = "none";
  generate->add_option("--dims", gen_dims, "|A|,|B|,|S|")->delimiter(',')->required();
  generate->add_option("--gamma", gen_gamma, "discount")->check(kDiscount);
  generate->add_option("--seed", seed, "generator seed");
  generate->add_option("--sampling", sampling, "embed a behavior model")
      ->check(CLI::IsMember({"none", "uniform", "random"}));
  generate->add_option("--out", out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*solve) return run_solve(game, tol);
    if (*learn) return run_learn(game, alpha, steps, seed, stride, out);
    if (*verify) {
      cfg.variant = mmq::parse_exponent_variant(variant);
      return run_verify(cfg, game, out);
    }
    if (*bounds) return run_bounds(game, alpha, k_max, k_step, mmq::parse_exponent_variant(variant), out);
    if (*generate) return run_generate(gen_dims, gen_gamma, seed, sampling, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const mmq::LoadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const mmq::ParameterError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const mmq::AssumptionViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitViolation;
  }
  return kExitUsage;
}
