#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "mmq/operators.hpp"

namespace mmq {

struct ViResult {
  QTable q_star;
  int iterations = 0;
  // ||Q_k+1 - Q_k||_inf = ||F Q_k - Q_k||_inf of the last step taken.
  double residual = 0.0;
  // residual * gamma / (1 - gamma), an upper bound on ||q_star - Q*||_inf.
  double error_certificate = 0.0;
};

inline QTable qvi_step(const Eigen::Ref<const Vector>& q, const GameSpec& spec) {
  return bellman_operator(q, spec);
}

// Called with (k, Q_k) for every iterate of a solve, starting at k = 0.
using ViObserver = std::function<void(int, const QTable&)>;

/// Q-value iteration from Q_0 = 0 until the contraction certificate drops
/// below `tol`.
inline ViResult solve_optimal_q(const GameSpec& spec, double tol, const ViObserver& observe = {}) {
  if (!(tol > 0.0)) throw ParameterError("tolerance must be positive");
  const double gamma = spec.discount;
  const int n = spec.dims.n();
  QTable q = QTable::Zero(n);
  if (observe) observe(0, q);

  ViResult result;
  if (gamma == 0.0) {
    q = qvi_step(q, spec);
    if (observe) observe(1, q);
    result.q_star = q;
    result.iterations = 1;
    result.residual = (qvi_step(q, spec) - q).lpNorm<Eigen::Infinity>();
    result.error_certificate = 0.0;
    return result;
  }

  const double threshold = tol * (1.0 - gamma) / gamma;
  const double ratio = std::log(tol * (1.0 - gamma)) / std::log(gamma);
  const int cap = 10 * static_cast<int>(std::ceil(std::max(ratio, 1.0))) + 10;
  for (int k = 1; k <= cap; ++k) {
    QTable next = qvi_step(q, spec);
    const double diff = (next - q).lpNorm<Eigen::Infinity>();
    q = std::move(next);
    if (observe) observe(k, q);
    if (diff <= threshold) {
      result.q_star = q;
      result.iterations = k;
      result.residual = diff;
      result.error_certificate = diff * gamma / (1.0 - gamma);
      return result;
    }
  }
  throw NonConvergenceError("Q-value iteration exceeded its iteration cap");
}

struct GreedyPolicies {
  std::vector<int> pi;               // pi[s] = a
  std::vector<std::vector<int>> mu;  // mu[s][a] = b
};

// pi(s) = argmax_a min_b Q(s,a,b), mu(s,a) = argmin_b Q(s,a,b); lowest index on ties.
inline GreedyPolicies greedy_policies(const Eigen::Ref<const Vector>& q, const Dims& dims) {
  const SelectorMin gamma = min_selector(q, dims);
  const SelectorMax pi = max_selector(gamma.apply(q), dims);
  GreedyPolicies out;
  out.pi.resize(dims.states);
  out.mu.assign(dims.states, std::vector<int>(dims.actions_user));
  for (int s = 0; s < dims.states; ++s) {
    out.pi[s] = pi.argmax(s);
    for (int a = 0; a < dims.actions_user; ++a) out.mu[s][a] = gamma.argmin(s, a);
  }
  return out;
}

struct SandwichCheck {
  QTable lower;
  QTable upper;
  bool holds = false;
};

/// Evaluates the per-step bracket
///   gamma P Pi_{Gamma_Qk Q*} Gamma_Qk (Qk - Q*) <= F Qk - Q* <= gamma P Pi_{Gamma_Q* Qk} Gamma_Q* (Qk - Q*).
inline SandwichCheck vi_sandwich_check(const Eigen::Ref<const Vector>& qk,
                                       const Eigen::Ref<const Vector>& q_star, const GameSpec& spec,
                                       double tol = 1e-12) {
  const Dims& dims = spec.dims;
  detail::check_length(qk, dims.n(), "Q_k");
  detail::check_length(q_star, dims.n(), "Q*");
  const Vector diff = qk - q_star;
  const SelectorMin gamma_k = min_selector(qk, dims);
  const SelectorMin gamma_star = min_selector(q_star, dims);
  const SelectorMax pi_low = max_selector(gamma_k.apply(q_star), dims);
  const SelectorMax pi_up = max_selector(gamma_star.apply(qk), dims);

  SandwichCheck out;
  out.lower = spec.discount * (spec.transition * pi_low.apply(gamma_k.apply(diff)));
  out.upper = spec.discount * (spec.transition * pi_up.apply(gamma_star.apply(diff)));
  const Vector mid = bellman_operator(qk, spec) - q_star;
  out.holds = ((out.lower - mid).array() <= tol).all() && ((mid - out.upper).array() <= tol).all();
  return out;
}

}  // namespace mmq
