#pragma once

#include <cstdint>
#include <vector>

#include "mmq/operators.hpp"

namespace mmq {

struct Experience {
  int s = 0;
  int a = 0;
  int b = 0;
  int s_next = 0;
  double r = 0.0;
  bool operator==(const Experience&) const = default;
};

namespace detail {

// max_a min_b q(s, a, b) for a single state.
inline double maxmin_at(const Eigen::Ref<const Vector>& q, int s, const Dims& dims) {
  double best = 0.0;
  for (int a = 0; a < dims.actions_user; ++a) {
    double worst = q[flat_index(a, 0, s, dims)];
    for (int b = 1; b < dims.actions_adv; ++b) worst = std::min(worst, q[flat_index(a, b, s, dims)]);
    if (a == 0 || worst > best) best = worst;
  }
  return best;
}

}  // namespace detail

// s ~ p, a ~ beta(.|s), b ~ phi(.|s), s' ~ P(.|s,a,b); r is the expected reward.
inline Experience sample_experience(const GameSpec& spec, const SamplingModel& model, Engine& rng) {
  Experience e;
  e.s = sample_categorical(rng, model.state_dist);
  e.a = sample_categorical(rng, model.user_policy.row(e.s));
  e.b = sample_categorical(rng, model.adv_policy.row(e.s));
  const int i = flat_index(e.a, e.b, e.s, spec.dims);
  e.s_next = sample_categorical(rng, spec.transition.row(i));
  e.r = spec.reward[i];
  return e;
}

// delta = r + gamma max_a' min_b' Q(s', a', b') - Q(s, a, b).
inline double td_error(const Eigen::Ref<const Vector>& q, const Experience& e, const GameSpec& spec) {
  return e.r + spec.discount * detail::maxmin_at(q, e.s_next, spec.dims) -
         q[flat_index(e.a, e.b, e.s, spec.dims)];
}

/// Minimax Q-learning iterate. The engine is owned so that a state can be
/// copied to fork an identical sample stream.
struct LearnerState {
  QTable q;
  std::int64_t step = 0;
  double alpha = 0.0;
  Engine rng;
  double last_td_error = 0.0;
};

// Moves the single entry (s, a, b) along the TD error and returns it.
inline double ql_update_in_place(QTable& q, const Experience& e, const GameSpec& spec, double alpha) {
  const double delta = td_error(q, e, spec);
  q[flat_index(e.a, e.b, e.s, spec.dims)] += alpha * delta;
  return delta;
}

inline LearnerState ql_update(LearnerState state, const Experience& e, const GameSpec& spec) {
  check_step_size(state.alpha);
  state.last_td_error = ql_update_in_place(state.q, e, spec, state.alpha);
  ++state.step;
  return state;
}

/// Conditional mean of the update direction: D (R + gamma P Pi Gamma Q - Q).
inline Vector expected_update(const Eigen::Ref<const Vector>& q, const GameSpec& spec, const Vector& d) {
  const Dims& dims = spec.dims;
  Vector v(dims.states);
  for (int s = 0; s < dims.states; ++s) v[s] = detail::maxmin_at(q, s, dims);
  return d.cwiseProduct(spec.reward + spec.discount * (spec.transition * v) - q);
}

/// w = (e_a (x) e_b (x) e_s) delta - D (R + gamma P Pi Gamma Q - Q).
inline Vector noise_vector(const Eigen::Ref<const Vector>& q, const Experience& e, const GameSpec& spec,
                           const Vector& d) {
  detail::check_length(q, spec.dims.n(), "Q");
  Vector w = -expected_update(q, spec, d);
  w[flat_index(e.a, e.b, e.s, spec.dims)] += td_error(q, e, spec);
  return w;
}

inline Vector noise_vector(const Eigen::Ref<const Vector>& q, const Experience& e, const GameSpec& spec,
                           const SamplingModel& model) {
  return noise_vector(q, e, spec, occupation_frequency(model).d);
}

// Largest ||Q_k||_inf allowed along a trajectory started at q0.
inline double q_max_bound(const Eigen::Ref<const Vector>& q0, double gamma) {
  return std::max(1.0, q0.lpNorm<Eigen::Infinity>()) / (1.0 - gamma);
}

// Slack on the boundedness check for accumulated rounding.
inline constexpr double kBoundSlack = 1e-12;

struct LearningTrace {
  std::vector<std::int64_t> steps;
  std::vector<QTable> snapshots;
  QTable final_q;
  double q_max = 0.0;
  double max_norm = 0.0;  // max_k ||Q_k||_inf
  std::int64_t bound_violations = 0;
};

inline int default_stride(const Dims& dims) { return dims.n() <= 64 ? 1 : 10; }

/// Runs minimax Q-learning with i.i.d. samples.
/// Snapshots are taken at k = 0, every `stride` steps, and at the end.
inline LearningTrace run_q_learning(const GameSpec& spec, const SamplingModel& model, double alpha,
                                    std::int64_t steps, std::uint64_t seed, const QTable& q0,
                                    int stride = 0) {
  check_step_size(alpha);
  if (steps < 0) throw ParameterError("steps must be nonnegative");
  detail::check_length(q0, spec.dims.n(), "Q_0");
  if (q0.lpNorm<Eigen::Infinity>() > 1.0) throw AssumptionViolation("||Q_0||_inf must be at most 1");
  occupation_frequency(model);  // rejects a zero visit probability
  if (stride <= 0) stride = default_stride(spec.dims);

  LearningTrace trace;
  trace.q_max = q_max_bound(q0, spec.discount);
  Engine rng(seed);
  QTable q = q0;
  trace.max_norm = q.lpNorm<Eigen::Infinity>();
  trace.steps.push_back(0);
  trace.snapshots.push_back(q);
  for (std::int64_t k = 1; k <= steps; ++k) {
    const Experience e = sample_experience(spec, model, rng);
    ql_update_in_place(q, e, spec, alpha);
    const double norm = q.lpNorm<Eigen::Infinity>();
    trace.max_norm = std::max(trace.max_norm, norm);
    if (norm > trace.q_max + kBoundSlack) ++trace.bound_violations;
    if (k % stride == 0 || k == steps) {
      trace.steps.push_back(k);
      trace.snapshots.push_back(q);
    }
  }
  trace.final_q = q;
  return trace;
}

}  // namespace mmq
