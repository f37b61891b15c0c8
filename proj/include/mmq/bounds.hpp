#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mmq/game_model.hpp"

namespace mmq {

// Exponent on n in the k rho^(k-1) style terms of the lower/upper bounds.
// `Printed` keeps 2/3; `ThreeHalves` uses 3/2, which is what the
// ||.||_2 <= sqrt(n) ||.||_inf step that produces the term gives.
enum class ExponentVariant { Printed, ThreeHalves };

inline std::string_view to_string(ExponentVariant v) {
  return v == ExponentVariant::Printed ? "printed" : "three_halves";
}

inline ExponentVariant parse_exponent_variant(std::string_view s) {
  if (s == "printed") return ExponentVariant::Printed;
  if (s == "three_halves") return ExponentVariant::ThreeHalves;
  throw ParameterError("unknown exponent variant: " + std::string(s));
}

inline double decay_rate(double alpha, double d_min, double gamma) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("step size must lie in (0, 1)");
  if (!(d_min > 0.0 && d_min <= 1.0)) throw ParameterError("d_min must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterError("discount must lie in [0, 1)");
  const double rho = 1.0 - alpha * d_min * (1.0 - gamma);
  if (!(rho > 0.0 && rho < 1.0)) throw ParameterError("decay rate outside (0, 1)");
  return rho;
}

struct Constants {
  double q_max = 0.0;
  double w_max = 0.0;
};

inline Constants constants(double q0_norm_inf, double gamma) {
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterError("discount must lie in [0, 1)");
  return {std::max(1.0, q0_norm_inf) / (1.0 - gamma), 9.0 / ((1.0 - gamma) * (1.0 - gamma))};
}

inline Constants constants(const Eigen::Ref<const Vector>& q0, double gamma) {
  return constants(q0.lpNorm<Eigen::Infinity>(), gamma);
}

/// Inputs shared by every finite-time bound.
struct BoundParams {
  double alpha = 0.0;
  double gamma = 0.0;
  double d_min = 0.0;
  double d_max = 0.0;
  int n = 0;
  double rho = 0.0;
  double w_max = 0.0;
  double q_max = 0.0;
  double q0_err_2 = 0.0;    // ||Q_0 - Q*||_2
  double q0_err_inf = 0.0;  // ||Q_0 - Q*||_inf
  ExponentVariant variant = ExponentVariant::Printed;

  static BoundParams make(double alpha, double gamma, double d_min, double d_max, int n,
                          double q0_norm_inf, double q0_err_2, double q0_err_inf,
                          ExponentVariant variant = ExponentVariant::Printed) {
    if (n <= 0) throw ParameterError("n must be positive");
    if (!(d_max >= d_min && d_max <= 1.0)) throw ParameterError("d_max must lie in [d_min, 1]");
    BoundParams p;
    p.alpha = alpha;
    p.gamma = gamma;
    p.d_min = d_min;
    p.d_max = d_max;
    p.n = n;
    p.rho = decay_rate(alpha, d_min, gamma);
    const Constants c = constants(q0_norm_inf, gamma);
    p.q_max = c.q_max;
    p.w_max = c.w_max;
    p.q0_err_2 = q0_err_2;
    p.q0_err_inf = q0_err_inf;
    p.variant = variant;
    return p;
  }

  double nd() const { return static_cast<double>(n); }
  // n^(2/3) by default, or n^(3/2).
  double n_coupling() const {
    return std::pow(nd(), variant == ExponentVariant::Printed ? 2.0 / 3.0 : 1.5);
  }
};

namespace detail {

// 9 d_max n alpha^(1/2) / (d_min^(3/2) (1 - gamma)^(5/2)).
inline double step_size_floor(const BoundParams& p) {
  return 9.0 * p.d_max * p.nd() * std::sqrt(p.alpha) /
         (std::pow(p.d_min, 1.5) * std::pow(1.0 - p.gamma, 2.5));
}

// 2 n^(3/2) rho^k / (1 - gamma).
inline double transient(const BoundParams& p, std::int64_t k) {
  return 2.0 * std::pow(p.nd(), 1.5) * std::pow(p.rho, static_cast<double>(k)) / (1.0 - p.gamma);
}

// 8 gamma d_max n^e / (1 - gamma) * 1 / (d_min (1 - gamma)) * rho^(k/2 - 1).
inline double loose_coupling(const BoundParams& p, std::int64_t k) {
  return 8.0 * p.gamma * p.d_max * p.n_coupling() / (1.0 - p.gamma) / (p.d_min * (1.0 - p.gamma)) *
         std::pow(p.rho, static_cast<double>(k) / 2.0 - 1.0);
}

}  // namespace detail

/// Mean ||Q^LU_k - Q*||_2 bound for the fixed-matrix comparison system.
inline double bound_thm1(std::int64_t k, const BoundParams& p) {
  return 3.0 * std::sqrt(p.alpha) * p.nd() / (std::sqrt(p.d_min) * std::pow(1.0 - p.gamma, 1.5)) +
         p.nd() * p.q0_err_2 * std::pow(p.rho, static_cast<double>(k));
}

/// Mean ||Q^L_k - Q*||_inf bound with the k rho^(k-1) coupling term.
inline double bound_thm2(std::int64_t k, const BoundParams& p) {
  const double kd = static_cast<double>(k);
  const double coupling = k == 0 ? 0.0
                                 : 4.0 * p.alpha * p.gamma * p.d_max * p.n_coupling() / (1.0 - p.gamma) *
                                       kd * std::pow(p.rho, kd - 1.0);
  return detail::step_size_floor(p) + detail::transient(p, k) + coupling;
}

enum class Cor1Form { Eq4, Eq5 };

/// Looser forms of bound_thm2: Eq4 replaces k rho^(k-1) by its maximum over k
/// times rho^(k/2); Eq5 further replaces 1/ln(1/rho) by 1/(alpha d_min (1-gamma)).
inline double bound_cor1(std::int64_t k, const BoundParams& p, Cor1Form form) {
  if (form == Cor1Form::Eq5) {
    return detail::step_size_floor(p) + detail::transient(p, k) + detail::loose_coupling(p, k);
  }
  const double log_rho = std::log(p.rho);
  const double peak = (-2.0 / log_rho) * std::pow(p.rho, -1.0 / log_rho - 1.0);
  return detail::step_size_floor(p) + detail::transient(p, k) +
         4.0 * p.alpha * p.gamma * p.d_max * p.n_coupling() / (1.0 - p.gamma) * peak *
             std::pow(p.rho, static_cast<double>(k) / 2.0);
}

/// Mean ||Q^U_k - Q*||_inf bound; same closed form as bound_cor1(Eq5).
inline double bound_thm4(std::int64_t k, const BoundParams& p) {
  return detail::step_size_floor(p) + detail::transient(p, k) + detail::loose_coupling(p, k);
}

/// Mean ||Q_k - Q*|| bound for minimax Q-learning itself, with constants
/// 27, 6 and 24 * 3.
inline double bound_thm5(std::int64_t k, const BoundParams& p) {
  return 3.0 * detail::step_size_floor(p) + 3.0 * detail::transient(p, k) +
         24.0 * p.gamma * p.d_max * p.n_coupling() / (1.0 - p.gamma) * 3.0 / (p.d_min * (1.0 - p.gamma)) *
             std::pow(p.rho, static_cast<double>(k) / 2.0 - 1.0);
}

enum class BoundId { Thm1, Thm2, Cor1Eq4, Cor1Eq5, Thm4, Thm5 };

inline constexpr BoundId kAllBounds[] = {BoundId::Thm1,    BoundId::Thm2, BoundId::Cor1Eq4,
                                         BoundId::Cor1Eq5, BoundId::Thm4, BoundId::Thm5};

inline std::string_view to_string(BoundId id) {
  switch (id) {
    case BoundId::Thm1: return "bound_thm1";
    case BoundId::Thm2: return "bound_thm2";
    case BoundId::Cor1Eq4: return "bound_cor1_eq4";
    case BoundId::Cor1Eq5: return "bound_cor1_eq5";
    case BoundId::Thm4: return "bound_thm4";
    case BoundId::Thm5: return "bound_thm5";
  }
  return "?";
}

inline double evaluate_bound(BoundId id, std::int64_t k, const BoundParams& p) {
  switch (id) {
    case BoundId::Thm1: return bound_thm1(k, p);
    case BoundId::Thm2: return bound_thm2(k, p);
    case BoundId::Cor1Eq4: return bound_cor1(k, p, Cor1Form::Eq4);
    case BoundId::Cor1Eq5: return bound_cor1(k, p, Cor1Form::Eq5);
    case BoundId::Thm4: return bound_thm4(k, p);
    case BoundId::Thm5: return bound_thm5(k, p);
  }
  return NAN;
}

struct BoundReport {
  BoundId which = BoundId::Thm1;
  std::vector<std::int64_t> steps;
  std::vector<double> margin;  // bound(k) - empirical(k)
  std::vector<std::int64_t> violations;

  bool ok() const { return violations.empty(); }
  double min_margin() const {
    double m = INFINITY;
    for (double v : margin) m = std::min(m, v);
    return m;
  }
};

/// Compares per-k empirical means with a bound. A step violates when its
/// margin is below -tolerance.
inline BoundReport empirical_vs_bound(const std::vector<std::int64_t>& steps,
                                      const std::vector<double>& empirical_mean, const BoundParams& p,
                                      BoundId which, double tolerance = 0.0) {
  if (steps.empty() || steps.size() != empirical_mean.size()) {
    throw DimensionError("empirical series must be nonempty and match the step list");
  }
  BoundReport r;
  r.which = which;
  r.steps = steps;
  r.margin.reserve(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const double m = evaluate_bound(which, steps[i], p) - empirical_mean[i];
    r.margin.push_back(m);
    if (m < -tolerance) r.violations.push_back(steps[i]);
  }
  return r;
}

}  // namespace mmq
