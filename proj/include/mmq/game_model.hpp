#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mmq/errors.hpp"
#include "mmq/rng.hpp"

namespace mmq {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// A Q-function over S x A x B stored as one vector in flat (a, b, s) order.
using QTable = Eigen::VectorXd;

inline constexpr double kSimplexTol = 1e-9;

/// Cardinalities of the user action set A, adversary action set B and state set S.
///
/// Flat order is a-major, then b, then s: entry (a, b, s) sits at
/// (a * |B| + b) * |S| + s, which is the position of e_a (x) e_b (x) e_s.
struct Dims {
  int actions_user = 0;
  int actions_adv = 0;
  int states = 0;

  int n() const { return actions_user * actions_adv * states; }
  // Number of (s, a) pairs, the row count of the min selector.
  int state_action_pairs() const { return states * actions_user; }

  bool operator==(const Dims&) const = default;
};

struct Triple {
  int a = 0;
  int b = 0;
  int s = 0;
  bool operator==(const Triple&) const = default;
};

inline void check_dims(const Dims& dims) {
  if (dims.actions_user <= 0 || dims.actions_adv <= 0 || dims.states <= 0) {
    throw ParameterError("dimensions must be positive");
  }
}

inline int flat_index(int a, int b, int s, const Dims& dims) {
  if (a < 0 || a >= dims.actions_user) throw IndexError("user action out of range");
  if (b < 0 || b >= dims.actions_adv) throw IndexError("adversary action out of range");
  if (s < 0 || s >= dims.states) throw IndexError("state out of range");
  return (a * dims.actions_adv + b) * dims.states + s;
}

inline Triple unflatten(int index, const Dims& dims) {
  if (index < 0 || index >= dims.n()) throw IndexError("flat index out of range");
  const int s = index % dims.states;
  const int ab = index / dims.states;
  return {ab / dims.actions_adv, ab % dims.actions_adv, s};
}

// Index of the (s, a) row used by the min selector; s-major within each a,
// matching the flat order with b collapsed.
inline int pair_index(int a, int s, const Dims& dims) { return a * dims.states + s; }

/// Alternating zero-sum Markov game with expected rewards.
///
/// `transition` is the stacked n x |S| matrix whose row flat_index(a,b,s)
/// is P(. | s, a, b); `reward` holds R(s, a, b) in the same order.
struct GameSpec {
  Dims dims;
  Matrix transition;
  Vector reward;
  double discount = 0.0;

  double P(int a, int b, int s, int s_next) const {
    return transition(flat_index(a, b, s, dims), s_next);
  }
  double R(int a, int b, int s) const { return reward[flat_index(a, b, s, dims)]; }

  bool operator==(const GameSpec& other) const {
    return dims == other.dims && discount == other.discount &&
           transition.rows() == other.transition.rows() &&
           transition.cols() == other.transition.cols() && transition == other.transition &&
           reward.size() == other.reward.size() && reward == other.reward;
  }
};

/// Behavior distributions p(s), beta(a|s), phi(b|s) of the i.i.d. sampler.
struct SamplingModel {
  Vector state_dist;   // |S|
  Matrix user_policy;  // |S| x |A|
  Matrix adv_policy;   // |S| x |B|

  Dims dims() const {
    return {static_cast<int>(user_policy.cols()), static_cast<int>(adv_policy.cols()),
            static_cast<int>(state_dist.size())};
  }
};

struct Violation {
  std::string rule;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

namespace detail {

inline std::string where(int a, int b, int s) {
  std::ostringstream os;
  os << "(a=" << a << ",b=" << b << ",s=" << s << ")";
  return os.str();
}

}  // namespace detail

inline ValidationReport validate_game(const GameSpec& spec) {
  ValidationReport report;
  auto add = [&](std::string rule, std::string msg) {
    report.violations.push_back({std::move(rule), std::move(msg)});
  };
  const Dims& d = spec.dims;
  if (d.actions_user <= 0 || d.actions_adv <= 0 || d.states <= 0) {
    add("dims", "dimensions must be positive");
    return report;
  }
  if (!(spec.discount >= 0.0 && spec.discount < 1.0)) {
    add("discount", "discount must lie in [0, 1)");
  }
  if (spec.transition.rows() != d.n() || spec.transition.cols() != d.states) {
    add("transition shape", "transition must be n x |S|");
    return report;
  }
  if (spec.reward.size() != d.n()) {
    add("reward shape", "reward must have n entries");
    return report;
  }
  for (int a = 0; a < d.actions_user; ++a) {
    for (int b = 0; b < d.actions_adv; ++b) {
      for (int s = 0; s < d.states; ++s) {
        const int i = flat_index(a, b, s, d);
        const auto row = spec.transition.row(i);
        bool finite = true;
        for (int j = 0; j < d.states; ++j) finite = finite && std::isfinite(row[j]);
        if (!finite || (row.array() < 0.0).any()) {
          add("nonnegative", "negative or non-finite probability at " + detail::where(a, b, s));
        }
        if (!finite || std::abs(row.sum() - 1.0) > kSimplexTol) {
          add("row sum", "row sum != 1 at " + detail::where(a, b, s));
        }
        const double r = spec.reward[i];
        if (!std::isfinite(r) || std::abs(r) > 1.0) {
          add("reward bound", "reward bound at " + detail::where(a, b, s));
        }
      }
    }
  }
  return report;
}

namespace detail {

inline void check_simplex(const Eigen::Ref<const Vector>& v, const std::string& name) {
  if ((v.array() < 0.0).any() || !v.allFinite()) {
    throw AssumptionViolation(name + " has a negative or non-finite entry");
  }
  if (std::abs(v.sum() - 1.0) > kSimplexTol) throw AssumptionViolation(name + " does not sum to 1");
}

}  // namespace detail

/// Throws AssumptionViolation unless every distribution is a simplex and the
/// model matches `dims`.
inline void validate_sampling(const SamplingModel& model, const Dims& dims) {
  if (model.state_dist.size() != dims.states || model.user_policy.rows() != dims.states ||
      model.adv_policy.rows() != dims.states || model.user_policy.cols() != dims.actions_user ||
      model.adv_policy.cols() != dims.actions_adv) {
    throw DimensionError("sampling model does not match game dimensions");
  }
  detail::check_simplex(model.state_dist, "p");
  for (int s = 0; s < dims.states; ++s) {
    detail::check_simplex(model.user_policy.row(s).transpose(), "beta(.|s=" + std::to_string(s) + ")");
    detail::check_simplex(model.adv_policy.row(s).transpose(), "phi(.|s=" + std::to_string(s) + ")");
  }
}

struct Occupation {
  Vector d;  // flat order
  double d_min = 0.0;
  double d_max = 0.0;
};

inline Occupation occupation_frequency(const SamplingModel& model) {
  const Dims dims = model.dims();
  validate_sampling(model, dims);
  Occupation occ;
  occ.d.resize(dims.n());
  for (int a = 0; a < dims.actions_user; ++a) {
    for (int b = 0; b < dims.actions_adv; ++b) {
      for (int s = 0; s < dims.states; ++s) {
        const double v = model.state_dist[s] * model.user_policy(s, a) * model.adv_policy(s, b);
        if (!(v > 0.0)) {
          throw AssumptionViolation("occupation frequency is zero at " + detail::where(a, b, s));
        }
        occ.d[flat_index(a, b, s, dims)] = v;
      }
    }
  }
  occ.d_min = occ.d.minCoeff();
  occ.d_max = occ.d.maxCoeff();
  return occ;
}

inline SamplingModel uniform_sampling(const Dims& dims) {
  check_dims(dims);
  SamplingModel m;
  m.state_dist = Vector::Constant(dims.states, 1.0 / dims.states);
  m.user_policy = Matrix::Constant(dims.states, dims.actions_user, 1.0 / dims.actions_user);
  m.adv_policy = Matrix::Constant(dims.states, dims.actions_adv, 1.0 / dims.actions_adv);
  return m;
}

namespace detail {

// Positive weights in [0.05, 1.05), normalized.
inline Vector random_simplex(Engine& rng, int size) {
  Vector v(size);
  for (int i = 0; i < size; ++i) v[i] = 0.05 + uniform01(rng);
  return v / v.sum();
}

}  // namespace detail

inline GameSpec generate_random_game(const Dims& dims, double gamma, std::uint64_t seed) {
  check_dims(dims);
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ParameterError("discount must lie in [0, 1)");
  Engine rng(seed);
  GameSpec spec;
  spec.dims = dims;
  spec.discount = gamma;
  spec.transition.resize(dims.n(), dims.states);
  spec.reward.resize(dims.n());
  for (int i = 0; i < dims.n(); ++i) {
    spec.transition.row(i) = detail::random_simplex(rng, dims.states).transpose();
  }
  for (int i = 0; i < dims.n(); ++i) spec.reward[i] = uniform(rng, -1.0, 1.0);
  return spec;
}

// Random behavior model with every probability bounded away from zero.
inline SamplingModel generate_random_sampling(const Dims& dims, std::uint64_t seed) {
  check_dims(dims);
  Engine rng(seed);
  SamplingModel m;
  m.state_dist = detail::random_simplex(rng, dims.states);
  m.user_policy.resize(dims.states, dims.actions_user);
  m.adv_policy.resize(dims.states, dims.actions_adv);
  for (int s = 0; s < dims.states; ++s) {
    m.user_policy.row(s) = detail::random_simplex(rng, dims.actions_user).transpose();
    m.adv_policy.row(s) = detail::random_simplex(rng, dims.actions_adv).transpose();
  }
  return m;
}

}  // namespace mmq
