#pragma once

#include <vector>

#include "mmq/game_model.hpp"

namespace mmq {

namespace detail {

inline void check_length(const Eigen::Ref<const Vector>& v, int expected, const char* what) {
  if (v.size() != expected) throw DimensionError(std::string(what) + " has the wrong length");
}

}  // namespace detail

/// Gamma_Q: picks, for every (s, a), the adversary action minimizing Q(s, a, .).
///
/// Stored as the chosen flat column per row; matrix() materializes the
/// (|S||A|) x n binary matrix. Ties go to the lowest b.
class SelectorMin {
 public:
  SelectorMin(Dims dims, std::vector<int> columns) : dims_(dims), columns_(std::move(columns)) {}

  const Dims& dims() const { return dims_; }
  // Flat index selected for row pair_index(a, s).
  int column(int row) const { return columns_[row]; }
  int argmin(int s, int a) const { return unflatten(columns_[pair_index(a, s, dims_)], dims_).b; }

  Vector apply(const Eigen::Ref<const Vector>& q) const {
    detail::check_length(q, dims_.n(), "Q");
    Vector out(columns_.size());
    for (std::size_t r = 0; r < columns_.size(); ++r) out[r] = q[columns_[r]];
    return out;
  }

  Matrix matrix() const {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(columns_.size()), dims_.n());
    for (std::size_t r = 0; r < columns_.size(); ++r) m(r, columns_[r]) = 1.0;
    return m;
  }

  bool operator==(const SelectorMin&) const = default;

 private:
  Dims dims_;
  std::vector<int> columns_;
};

/// Pi_{Q'}: picks, for every s, the user action maximizing Q'(s, .) over the
/// (s, a) vector. matrix() is |S| x (|S||A|). Ties go to the lowest a.
class SelectorMax {
 public:
  SelectorMax(Dims dims, std::vector<int> columns) : dims_(dims), columns_(std::move(columns)) {}

  const Dims& dims() const { return dims_; }
  int column(int s) const { return columns_[s]; }
  int argmax(int s) const { return columns_[s] / dims_.states; }

  Vector apply(const Eigen::Ref<const Vector>& qp) const {
    detail::check_length(qp, dims_.state_action_pairs(), "Q'");
    Vector out(dims_.states);
    for (int s = 0; s < dims_.states; ++s) out[s] = qp[columns_[s]];
    return out;
  }

  Matrix matrix() const {
    Matrix m = Matrix::Zero(dims_.states, dims_.state_action_pairs());
    for (int s = 0; s < dims_.states; ++s) m(s, columns_[s]) = 1.0;
    return m;
  }

  bool operator==(const SelectorMax&) const = default;

 private:
  Dims dims_;
  std::vector<int> columns_;
};

inline SelectorMin min_selector(const Eigen::Ref<const Vector>& q, const Dims& dims) {
  detail::check_length(q, dims.n(), "Q");
  std::vector<int> cols(dims.state_action_pairs());
  for (int a = 0; a < dims.actions_user; ++a) {
    for (int s = 0; s < dims.states; ++s) {
      int best = flat_index(a, 0, s, dims);
      for (int b = 1; b < dims.actions_adv; ++b) {
        const int i = flat_index(a, b, s, dims);
        if (q[i] < q[best]) best = i;
      }
      cols[pair_index(a, s, dims)] = best;
    }
  }
  return {dims, std::move(cols)};
}

inline SelectorMax max_selector(const Eigen::Ref<const Vector>& qp, const Dims& dims) {
  detail::check_length(qp, dims.state_action_pairs(), "Q'");
  std::vector<int> cols(dims.states);
  for (int s = 0; s < dims.states; ++s) {
    int best = pair_index(0, s, dims);
    for (int a = 1; a < dims.actions_user; ++a) {
      const int r = pair_index(a, s, dims);
      if (qp[r] > qp[best]) best = r;
    }
    cols[s] = best;
  }
  return {dims, std::move(cols)};
}

// max_a min_b Q(s, a, b) for every s, i.e. Pi_{Gamma_Q Q} Gamma_Q Q.
inline Vector maxmin_values(const Eigen::Ref<const Vector>& q, const Dims& dims) {
  const SelectorMin gamma = min_selector(q, dims);
  const Vector inner = gamma.apply(q);
  return max_selector(inner, dims).apply(inner);
}

inline const Matrix& stacked_transition(const GameSpec& spec) { return spec.transition; }

inline Matrix occupation_matrix(const SamplingModel& model) {
  return occupation_frequency(model).d.asDiagonal();
}

// F Q = R + gamma P Pi_{Gamma_Q Q} Gamma_Q Q.
inline QTable bellman_operator(const Eigen::Ref<const Vector>& q, const GameSpec& spec) {
  detail::check_length(q, spec.dims.n(), "Q");
  return spec.reward + spec.discount * (spec.transition * maxmin_values(q, spec.dims));
}

/// P Pi Gamma as an n x n row-stochastic matrix for the given selector pair.
inline Matrix greedy_transition(const GameSpec& spec, const SelectorMax& pi, const SelectorMin& gamma) {
  return spec.transition * pi.matrix() * gamma.matrix();
}

// Pi_{Gamma_Q Q} Gamma_Q as an |S| x n matrix.
inline Matrix maxmin_selection(const Eigen::Ref<const Vector>& q, const Dims& dims) {
  const SelectorMin gamma = min_selector(q, dims);
  const SelectorMax pi = max_selector(gamma.apply(q), dims);
  return pi.matrix() * gamma.matrix();
}

enum class SystemKind { VI, QL };

/// Mode matrices of the switched affine form Q' - Q* = A (Q - Q*) + b.
struct SystemMatrices {
  Matrix A;
  Vector b_affine;
  SystemKind kind = SystemKind::VI;
  QTable context;
};

inline SystemMatrices vi_system_matrices(const Eigen::Ref<const Vector>& q,
                                         const Eigen::Ref<const Vector>& q_star,
                                         const GameSpec& spec) {
  detail::check_length(q, spec.dims.n(), "Q");
  detail::check_length(q_star, spec.dims.n(), "Q*");
  const Matrix sel_q = maxmin_selection(q, spec.dims);
  const Matrix sel_star = maxmin_selection(q_star, spec.dims);
  SystemMatrices m;
  m.kind = SystemKind::VI;
  m.A = spec.discount * spec.transition * sel_q;
  m.b_affine = spec.discount * spec.transition * ((sel_q - sel_star) * q_star);
  m.context = q;
  return m;
}

inline void check_step_size(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ParameterError("step size must lie in (0, 1)");
}

inline SystemMatrices ql_system_matrices(const Eigen::Ref<const Vector>& q,
                                         const Eigen::Ref<const Vector>& q_star,
                                         const GameSpec& spec, const Vector& d, double alpha) {
  check_step_size(alpha);
  const int n = spec.dims.n();
  detail::check_length(q, n, "Q");
  detail::check_length(q_star, n, "Q*");
  detail::check_length(d, n, "d");
  const Matrix sel_q = maxmin_selection(q, spec.dims);
  const Matrix sel_star = maxmin_selection(q_star, spec.dims);
  const auto D = d.asDiagonal();
  SystemMatrices m;
  m.kind = SystemKind::QL;
  m.A = Matrix::Identity(n, n) +
        alpha * (spec.discount * (D * (spec.transition * sel_q)) - Matrix(D));
  m.b_affine = alpha * spec.discount * (D * (spec.transition * ((sel_q - sel_star) * q_star)));
  m.context = q;
  return m;
}

inline SystemMatrices ql_system_matrices(const Eigen::Ref<const Vector>& q,
                                         const Eigen::Ref<const Vector>& q_star,
                                         const GameSpec& spec, const SamplingModel& model,
                                         double alpha) {
  return ql_system_matrices(q, q_star, spec, occupation_frequency(model).d, alpha);
}

// Max absolute row sum.
inline double infinity_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace mmq
