#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "mmq/bounds.hpp"
#include "mmq/comparison_systems.hpp"
#include "mmq/game_io.hpp"
#include "mmq/value_iteration.hpp"

namespace mmq {

inline constexpr std::string_view kToolVersion = "0.3.0";

struct GeneratorSource {
  Dims dims;
  double gamma = 0.9;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::optional<std::filesystem::path> game_path;
  std::optional<GeneratorSource> generator;
  double alpha = 0.05;
  std::optional<double> gamma_override;
  std::int64_t steps = 10000;
  int trials = 1;
  std::uint64_t base_seed = 0;
  int stride = 1;
  std::optional<std::filesystem::path> out;
  ExponentVariant variant = ExponentVariant::Printed;
  double order_tol = 1e-9;
  double identity_tol = 1e-12;
  // Allowed amount by which an empirical mean may exceed its bound.
  double bound_tol = 0.0;
  bool check_identities = false;
  // 0 picks std::thread::hardware_concurrency().
  int threads = 0;

  void validate() const {
    if (trials < 1) throw ParameterError("trials must be at least 1");
    if (steps < 0) throw ParameterError("steps must be nonnegative");
    check_step_size(alpha);
    if (stride < 1) throw ParameterError("stride must be at least 1");
    if (game_path.has_value() == generator.has_value()) {
      throw ParameterError("exactly one game source (file or generator) is required");
    }
    if (gamma_override && !(*gamma_override >= 0.0 && *gamma_override < 1.0)) {
      throw ParameterError("discount must lie in [0, 1)");
    }
  }
};

inline GameDocument resolve_game(const ExperimentConfig& cfg) {
  GameDocument doc;
  if (cfg.game_path) {
    doc = load_game_document(*cfg.game_path);
  } else {
    doc.spec = generate_random_game(cfg.generator->dims, cfg.generator->gamma, cfg.generator->seed);
  }
  if (cfg.gamma_override) doc.spec.discount = *cfg.gamma_override;
  if (!doc.sampling) doc.sampling = uniform_sampling(doc.spec.dims);
  return doc;
}

/// Per-k aggregates of a coupled experiment.
struct RunRecord {
  std::vector<std::int64_t> steps;

  struct Series {
    std::vector<double> mean;
    std::vector<double> max;
  };
  // Indexed like ErrorNorms: orig/low/up/lu/ul, each in inf and 2 norm.
  Series orig_inf, orig_2, low_inf, low_2, up_inf, up_2, lu_inf, lu_2, ul_inf, ul_2;
  std::vector<std::int64_t> order_violations;  // summed over trials
  std::vector<std::vector<double>> bounds;     // one per kAllBounds entry

  std::array<std::int64_t, kRelationCount> relation_violations{};
  std::int64_t bound_violations_lemma = 0;  // ||Q_k||_inf > Q_max events
  double max_orig_norm = 0.0;
  double max_order_gap = 0.0;
  double max_original_form_residual = 0.0;
  double max_linear_residual = 0.0;
  double max_error_residual = 0.0;
  double max_A_norm_excess = -INFINITY;
  double max_B_norm_excess = -INFINITY;

  std::vector<BoundReport> bound_checks;  // gating comparisons
  std::vector<BoundReport> informational;  // reported only
  std::vector<std::string> diagnostics;

  BoundParams params;
  QTable q_star;
  std::vector<std::uint64_t> seeds;
  nlohmann::json config_echo;
  std::uint64_t config_hash = 0;
  bool identities_checked = false;
  double identity_tol = 1e-12;

  bool passed() const {
    if (!diagnostics.empty()) return false;
    for (const auto& r : bound_checks) {
      if (!r.ok()) return false;
    }
    return true;
  }
};

inline std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  if (cfg.game_path) j["game"] = cfg.game_path->string();
  if (cfg.generator) {
    const auto& g = *cfg.generator;
    j["generator"] = {{"dims", {g.dims.actions_user, g.dims.actions_adv, g.dims.states}},
                      {"gamma", g.gamma},
                      {"seed", g.seed}};
  }
  j["alpha"] = cfg.alpha;
  if (cfg.gamma_override) j["gamma_override"] = *cfg.gamma_override;
  j["steps"] = cfg.steps;
  j["trials"] = cfg.trials;
  j["base_seed"] = cfg.base_seed;
  j["stride"] = cfg.stride;
  j["bound_variant"] = std::string(to_string(cfg.variant));
  j["order_tol"] = cfg.order_tol;
  j["identity_tol"] = cfg.identity_tol;
  j["bound_tol"] = cfg.bound_tol;
  j["check_identities"] = cfg.check_identities;
  return j;
}

namespace detail {

inline void accumulate(RunRecord::Series& s, std::size_t i, double v) {
  s.mean[i] += v;
  s.max[i] = std::max(s.max[i], v);
}

inline void resize_series(RunRecord::Series& s, std::size_t len) {
  s.mean.assign(len, 0.0);
  s.max.assign(len, 0.0);
}

}  // namespace detail

/// Runs `trials` coupled trajectories of the resolved game and aggregates
/// them in trial order. Trial i uses derive_seed(base_seed, i).
inline RunRecord run_experiment(const ExperimentConfig& cfg, const GameDocument& game) {
  cfg.validate();
  const GameSpec& spec = game.spec;
  const SamplingModel model = game.sampling ? *game.sampling : uniform_sampling(spec.dims);
  const Occupation occ = occupation_frequency(model);

  RunRecord rec;
  rec.config_echo = config_to_json(cfg);
  rec.config_hash = fnv1a(rec.config_echo.dump());
  rec.identities_checked = cfg.check_identities;
  rec.identity_tol = cfg.identity_tol;
  rec.q_star = solve_optimal_q(spec, 1e-12).q_star;
  const QTable q0 = QTable::Zero(spec.dims.n());
  rec.params = BoundParams::make(cfg.alpha, spec.discount, occ.d_min, occ.d_max, spec.dims.n(),
                                 q0.lpNorm<Eigen::Infinity>(), (q0 - rec.q_star).norm(),
                                 (q0 - rec.q_star).lpNorm<Eigen::Infinity>(), cfg.variant);
  for (int i = 0; i < cfg.trials; ++i) rec.seeds.push_back(derive_seed(cfg.base_seed, i));

  CoupledOptions opt;
  opt.stride = cfg.stride;
  opt.check_identities = cfg.check_identities;
  opt.order_tol = cfg.order_tol;

  for (std::int64_t k = 0; k <= cfg.steps; k += cfg.stride) rec.steps.push_back(k);
  if (rec.steps.back() != cfg.steps) rec.steps.push_back(cfg.steps);
  const std::size_t len = rec.steps.size();
  for (auto* s : {&rec.orig_inf, &rec.orig_2, &rec.low_inf, &rec.low_2, &rec.up_inf, &rec.up_2,
                  &rec.lu_inf, &rec.lu_2, &rec.ul_inf, &rec.ul_2}) {
    detail::resize_series(*s, len);
  }
  rec.order_violations.assign(len, 0);

  int threads = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  threads = std::clamp(threads, 1, cfg.trials);

  auto merge = [&](int trial, const CoupledTrajectory& t) {
    for (std::size_t i = 0; i < len; ++i) {
      const ErrorNorms& e = t.errors[i];
      detail::accumulate(rec.orig_inf, i, e.orig_inf);
      detail::accumulate(rec.orig_2, i, e.orig_2);
      detail::accumulate(rec.low_inf, i, e.low_inf);
      detail::accumulate(rec.low_2, i, e.low_2);
      detail::accumulate(rec.up_inf, i, e.up_inf);
      detail::accumulate(rec.up_2, i, e.up_2);
      detail::accumulate(rec.lu_inf, i, e.lu_inf);
      detail::accumulate(rec.lu_2, i, e.lu_2);
      detail::accumulate(rec.ul_inf, i, e.ul_inf);
      detail::accumulate(rec.ul_2, i, e.ul_2);
      rec.order_violations[i] += t.order_violations[i];
    }
    const CoupledSummary& s = t.summary;
    for (int r = 0; r < kRelationCount; ++r) {
      rec.relation_violations[r] += s.order_violations[r];
      if (s.order_violations[r] > 0) {
        rec.diagnostics.push_back("order_violation relation=" + std::string(kRelationNames[r]) +
                                  " trial=" + std::to_string(trial) +
                                  " count=" + std::to_string(s.order_violations[r]));
      }
    }
    rec.bound_violations_lemma += s.bound_violations;
    if (s.bound_violations > 0) {
      rec.diagnostics.push_back("boundedness_violation trial=" + std::to_string(trial) +
                                " count=" + std::to_string(s.bound_violations));
    }
    rec.max_orig_norm = std::max(rec.max_orig_norm, s.max_orig_norm);
    rec.max_order_gap = std::max(rec.max_order_gap, s.max_order_gap);
    rec.max_original_form_residual = std::max(rec.max_original_form_residual, s.max_original_form_residual);
    rec.max_linear_residual = std::max(rec.max_linear_residual, s.max_linear_residual);
    rec.max_error_residual =
        std::max({rec.max_error_residual, s.max_error_residual_lower, s.max_error_residual_upper});
    rec.max_A_norm_excess = std::max(rec.max_A_norm_excess, s.max_A_norm_excess);
    rec.max_B_norm_excess = std::max(rec.max_B_norm_excess, s.max_B_norm_excess);
  };

  // Trials run in batches of `threads`; each batch is merged in trial order.
  std::vector<CoupledTrajectory> batch(threads);
  for (int first = 0; first < cfg.trials; first += threads) {
    const int count = std::min(threads, cfg.trials - first);
    auto work = [&](int slot) {
      batch[slot] = run_coupled(spec, model, cfg.alpha, cfg.steps, rec.seeds[first + slot], q0,
                                rec.q_star, opt);
    };
    if (count == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int slot = 0; slot < count; ++slot) pool.emplace_back(work, slot);
      for (auto& th : pool) th.join();
    }
    for (int slot = 0; slot < count; ++slot) merge(first + slot, batch[slot]);
  }

  const double inv = 1.0 / cfg.trials;
  for (auto* s : {&rec.orig_inf, &rec.orig_2, &rec.low_inf, &rec.low_2, &rec.up_inf, &rec.up_2,
                  &rec.lu_inf, &rec.lu_2, &rec.ul_inf, &rec.ul_2}) {
    for (double& v : s->mean) v *= inv;
  }

  for (BoundId id : kAllBounds) {
    std::vector<double> values(len);
    for (std::size_t i = 0; i < len; ++i) values[i] = evaluate_bound(id, rec.steps[i], rec.params);
    rec.bounds.push_back(std::move(values));
  }

  const auto& P = rec.params;
  const double tol = cfg.bound_tol;
  rec.bound_checks.push_back(empirical_vs_bound(rec.steps, rec.lu_2.mean, P, BoundId::Thm1, tol));
  rec.bound_checks.push_back(empirical_vs_bound(rec.steps, rec.low_inf.mean, P, BoundId::Thm2, tol));
  rec.bound_checks.push_back(empirical_vs_bound(rec.steps, rec.low_inf.mean, P, BoundId::Cor1Eq4, tol));
  rec.bound_checks.push_back(empirical_vs_bound(rec.steps, rec.low_inf.mean, P, BoundId::Cor1Eq5, tol));
  rec.bound_checks.push_back(empirical_vs_bound(rec.steps, rec.up_inf.mean, P, BoundId::Thm4, tol));
  rec.bound_checks.push_back(empirical_vs_bound(rec.steps, rec.orig_inf.mean, P, BoundId::Thm5, tol));
  rec.informational.push_back(empirical_vs_bound(rec.steps, rec.ul_2.mean, P, BoundId::Thm1, tol));
  rec.informational.push_back(empirical_vs_bound(rec.steps, rec.orig_2.mean, P, BoundId::Thm5, tol));
  for (const auto& r : rec.bound_checks) {
    for (std::int64_t k : r.violations) {
      const std::size_t i = static_cast<std::size_t>(std::find(rec.steps.begin(), rec.steps.end(), k) -
                                                     rec.steps.begin());
      rec.diagnostics.push_back("bound_violation bound=" + std::string(to_string(r.which)) +
                                " k=" + std::to_string(k) + " margin=" + std::to_string(r.margin[i]));
    }
  }

  if (cfg.check_identities) {
    auto flag = [&](const char* name, double value, double limit) {
      if (value > limit) {
        std::ostringstream os;
        os << "identity_violation " << name << " value=" << value;
        rec.diagnostics.push_back(os.str());
      }
    };
    flag("original_form", rec.max_original_form_residual, cfg.identity_tol);
    flag("linear_form", rec.max_linear_residual, cfg.identity_tol);
    flag("error_system", rec.max_error_residual, cfg.identity_tol);
    flag("A_mode_norm", rec.max_A_norm_excess, 1e-12);
    flag("B_mode_norm", rec.max_B_norm_excess, 1e-12);
  }
  return rec;
}

inline RunRecord run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  return run_experiment(cfg, resolve_game(cfg));
}

inline constexpr const char* kCsvHeader =
    "k,err_orig_inf,err_orig_2,err_L_inf,err_U_inf,err_LU_2,err_UL_2,bound_thm1,bound_thm2,"
    "bound_cor1_eq4,bound_cor1_eq5,bound_thm4,bound_thm5,order_violations";

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_csv(const RunRecord& rec, std::ostream& os) {
  os << kCsvHeader << '\n';
  for (std::size_t i = 0; i < rec.steps.size(); ++i) {
    os << rec.steps[i];
    for (double v : {rec.orig_inf.mean[i], rec.orig_2.mean[i], rec.low_inf.mean[i], rec.up_inf.mean[i],
                     rec.lu_2.mean[i], rec.ul_2.mean[i]}) {
      os << ',' << format_number(v);
    }
    for (const auto& b : rec.bounds) os << ',' << format_number(b[i]);
    os << ',' << rec.order_violations[i] << '\n';
  }
}

inline nlohmann::json metadata_json(const RunRecord& rec) {
  nlohmann::json j;
  j["tool_version"] = std::string(kToolVersion);
  j["rng"] = std::string(kRngName);
  j["config"] = rec.config_echo;
  char hash[20];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(rec.config_hash));
  j["config_hash"] = hash;
  j["seeds"] = rec.seeds;
  j["bound_variant"] = std::string(to_string(rec.params.variant));
  j["q_star"] = std::vector<double>(rec.q_star.data(), rec.q_star.data() + rec.q_star.size());
  j["params"] = {{"alpha", rec.params.alpha}, {"gamma", rec.params.gamma}, {"d_min", rec.params.d_min},
                 {"d_max", rec.params.d_max}, {"n", rec.params.n},         {"rho", rec.params.rho},
                 {"w_max", rec.params.w_max}, {"q_max", rec.params.q_max}, {"q0_err_2", rec.params.q0_err_2},
                 {"q0_err_inf", rec.params.q0_err_inf}};
  nlohmann::json rel;
  for (int r = 0; r < kRelationCount; ++r) rel[kRelationNames[r]] = rec.relation_violations[r];
  j["order_violations"] = rel;
  j["max_order_gap"] = rec.max_order_gap;
  j["boundedness_violations"] = rec.bound_violations_lemma;
  j["max_orig_norm"] = rec.max_orig_norm;
  if (rec.identities_checked) {
    j["identities"] = {{"original_form", rec.max_original_form_residual},
                       {"linear_form", rec.max_linear_residual},
                       {"error_system", rec.max_error_residual},
                       {"A_mode_norm_excess", rec.max_A_norm_excess},
                       {"B_mode_norm_excess", rec.max_B_norm_excess}};
  }
  auto report = [](const BoundReport& r, const char* series) {
    return nlohmann::json{{"bound", std::string(to_string(r.which))},
                          {"series", series},
                          {"min_margin", r.min_margin()},
                          {"violations", r.violations.size()}};
  };
  j["bound_checks"] = {report(rec.bound_checks[0], "err_LU_2"), report(rec.bound_checks[1], "err_L_inf"),
                       report(rec.bound_checks[2], "err_L_inf"), report(rec.bound_checks[3], "err_L_inf"),
                       report(rec.bound_checks[4], "err_U_inf"), report(rec.bound_checks[5], "err_orig_inf")};
  j["informational"] = {report(rec.informational[0], "err_UL_2"), report(rec.informational[1], "err_orig_2")};
  j["diagnostics"] = rec.diagnostics;
  j["passed"] = rec.passed();
  return j;
}

// Writes `path` and its `path.meta.json` sidecar.
inline void write_run(const RunRecord& rec, const std::filesystem::path& path) {
  {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    write_csv(rec, os);
  }
  std::ofstream meta(path.string() + ".meta.json");
  if (!meta) throw std::runtime_error("cannot write metadata for " + path.string());
  meta << metadata_json(rec).dump(2) << '\n';
}

}  // namespace mmq
