#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mmq/q_learning.hpp"

namespace mmq {

/// Quantities fixed along a coupled run: the game, the occupation vector,
/// the step size and the greedy selectors of Q*.
///
/// All comparison-system states are differences x = Q - Q*.
class ComparisonContext {
 public:
  ComparisonContext(const GameSpec& spec, const Vector& d, double alpha, const QTable& q_star)
      : spec_(spec),
        d_(d),
        alpha_(alpha),
        q_star_(q_star),
        gamma_star_(min_selector(q_star, spec.dims)),
        pi_star_(max_selector(gamma_star_.apply(q_star), spec.dims)) {
    check_step_size(alpha);
    detail::check_length(d, spec.dims.n(), "d");
    detail::check_length(q_star, spec.dims.n(), "Q*");
  }

  const GameSpec& spec() const { return spec_; }
  const Vector& d() const { return d_; }
  double alpha() const { return alpha_; }
  const QTable& q_star() const { return q_star_; }
  const SelectorMin& gamma_star() const { return gamma_star_; }
  const SelectorMax& pi_star() const { return pi_star_; }

  // x + alpha (gamma D P v - D x) + alpha w, where v is the per-state selection.
  Vector advance(const Vector& x, const Vector& v, const Vector& w) const {
    return x + alpha_ * (spec_.discount * d_.cwiseProduct(spec_.transition * v) - d_.cwiseProduct(x)) +
           alpha_ * w;
  }

  // Pi_{Gamma_Q* Q*} Gamma_x x: min over b at the action Q* prefers.
  Vector lower_selection(const Vector& x) const {
    const Dims& dims = spec_.dims;
    Vector v(dims.states);
    for (int s = 0; s < dims.states; ++s) {
      const int a = pi_star_.argmax(s);
      double m = x[flat_index(a, 0, s, dims)];
      for (int b = 1; b < dims.actions_adv; ++b) m = std::min(m, x[flat_index(a, b, s, dims)]);
      v[s] = m;
    }
    return v;
  }

  // Pi_{Gamma_Q* x} Gamma_Q* x: max over a of x at the adversary action Q* prefers.
  Vector upper_selection(const Vector& x) const {
    const Vector inner = gamma_star_.apply(x);
    return max_selector(inner, spec_.dims).apply(inner);
  }

  // Pi_{Gamma_Q* Q*} Gamma_Q* x.
  Vector linear_selection(const Vector& x) const { return pi_star_.apply(gamma_star_.apply(x)); }

  Matrix identity() const { return Matrix::Identity(spec_.dims.n(), spec_.dims.n()); }

  // I + alpha (gamma D P S - D) for an |S| x n selection matrix S.
  Matrix mode_matrix(const Matrix& selection) const {
    const auto D = d_.asDiagonal();
    return identity() + alpha_ * (spec_.discount * (D * (spec_.transition * selection)) - Matrix(D));
  }

  // alpha gamma D P S.
  Matrix gap_matrix(const Matrix& selection) const {
    return alpha_ * spec_.discount * (d_.asDiagonal() * (spec_.transition * selection));
  }

  Matrix linear_matrix() const { return mode_matrix(pi_star_.matrix() * gamma_star_.matrix()); }

 private:
  GameSpec spec_;
  Vector d_;
  double alpha_;
  QTable q_star_;
  SelectorMin gamma_star_;
  SelectorMax pi_star_;
};

// Lower comparison system step on x = Q^L - Q*.
inline Vector step_lower(const ComparisonContext& ctx, const Vector& x, const Vector& w) {
  return ctx.advance(x, ctx.lower_selection(x), w);
}

// Upper comparison system step on x = Q^U - Q*.
inline Vector step_upper(const ComparisonContext& ctx, const Vector& x, const Vector& w) {
  return ctx.advance(x, ctx.upper_selection(x), w);
}

// Fixed-matrix system x' = A x + alpha w shared by the lower-upper and upper-lower systems.
inline Vector step_linear(const ComparisonContext& ctx, const Vector& x, const Vector& w) {
  return ctx.advance(x, ctx.linear_selection(x), w);
}

// Absolute-table forms.
inline QTable step_lower(const QTable& q_low, const QTable& q_star, const Vector& w, const GameSpec& spec,
                         const SamplingModel& model, double alpha) {
  const ComparisonContext ctx(spec, occupation_frequency(model).d, alpha, q_star);
  return q_star + step_lower(ctx, Vector(q_low - q_star), w);
}

inline QTable step_upper(const QTable& q_up, const QTable& q_star, const Vector& w, const GameSpec& spec,
                         const SamplingModel& model, double alpha) {
  const ComparisonContext ctx(spec, occupation_frequency(model).d, alpha, q_star);
  return q_star + step_upper(ctx, Vector(q_up - q_star), w);
}

enum class Side { Lower, Upper };

struct ErrorSystemMatrices {
  Matrix A_mode;
  Matrix B_mode;
  Side side = Side::Lower;
};

/// Mode matrices of the noise-free error recursions
///   lower: x^L' - x^LU' = A (x^L - x^LU) + B x^LU
///   upper: x^U' - x^UL' = A (x^U - x^UL) + B x^UL
/// selected by `x_mode` = Q_mode - Q*.
inline ErrorSystemMatrices error_system_matrices(const ComparisonContext& ctx, const Vector& x_mode,
                                                 Side side) {
  const Dims& dims = ctx.spec().dims;
  detail::check_length(x_mode, dims.n(), "Q_mode");
  const Matrix gamma_star = ctx.gamma_star().matrix();
  const Matrix pi_star = ctx.pi_star().matrix();
  ErrorSystemMatrices out;
  out.side = side;
  if (side == Side::Lower) {
    const Matrix gamma_mode = min_selector(x_mode, dims).matrix();
    out.A_mode = ctx.mode_matrix(pi_star * gamma_mode);
    out.B_mode = ctx.gap_matrix(pi_star * (gamma_mode - gamma_star));
  } else {
    const Matrix pi_mode = max_selector(ctx.gamma_star().apply(x_mode), dims).matrix();
    out.A_mode = ctx.mode_matrix(pi_mode * gamma_star);
    out.B_mode = ctx.gap_matrix((pi_mode - pi_star) * gamma_star);
  }
  return out;
}

inline ErrorSystemMatrices error_system_matrices(const QTable& q_mode, const QTable& q_star,
                                                 const GameSpec& spec, const SamplingModel& model,
                                                 double alpha, Side side) {
  const ComparisonContext ctx(spec, occupation_frequency(model).d, alpha, q_star);
  return error_system_matrices(ctx, Vector(q_mode - q_star), side);
}

/// The five coupled iterates in absolute form.
struct CoupledState {
  QTable q;
  QTable q_low;
  QTable q_up;
  QTable q_lu;
  QTable q_ul;
  QTable q_star;
  std::int64_t step = 0;
};

// ||. - Q*|| in the infinity and Euclidean norms for each of the five systems.
struct ErrorNorms {
  double orig_inf = 0, orig_2 = 0;
  double low_inf = 0, low_2 = 0;
  double up_inf = 0, up_2 = 0;
  double lu_inf = 0, lu_2 = 0;
  double ul_inf = 0, ul_2 = 0;
};

enum Relation : int {
  kLowBelowOrig = 0,  // Q^L <= Q
  kOrigBelowUp,       // Q <= Q^U
  kLowBelowLu,        // Q^L <= Q^LU
  kUlBelowUp,         // Q^UL <= Q^U
  kRelationCount
};

inline constexpr std::array<const char*, kRelationCount> kRelationNames = {
    "lower<=original", "original<=upper", "lower<=lower_upper", "upper_lower<=upper"};

struct CoupledOptions {
  int stride = 1;
  bool record_iterates = false;
  // Evaluate the dense matrix forms every step and record their residuals.
  bool check_identities = false;
  double order_tol = 1e-9;
};

/// Per-run diagnostics; the maxima are over every step, not only recorded ones.
struct CoupledSummary {
  std::array<std::int64_t, kRelationCount> order_violations{};
  double max_order_gap = 0.0;  // largest amount by which an ordering fails
  std::int64_t bound_violations = 0;
  double max_orig_norm = 0.0;
  double q_max = 0.0;
  // Only filled when CoupledOptions::check_identities is set.
  double max_original_form_residual = 0.0;
  double max_linear_residual = 0.0;
  double max_error_residual_lower = 0.0;
  double max_error_residual_upper = 0.0;
  double max_A_norm_excess = -INFINITY;  // max ||A_mode||_inf - rho
  double max_B_norm_excess = -INFINITY;  // max ||B_mode||_inf - 2 alpha gamma d_max

  std::int64_t total_order_violations() const {
    std::int64_t t = 0;
    for (auto v : order_violations) t += v;
    return t;
  }
};

struct CoupledTrajectory {
  std::vector<std::int64_t> steps;
  std::vector<ErrorNorms> errors;
  // Entries violated since the previous recorded step.
  std::vector<int> order_violations;
  std::vector<CoupledState> states;   // only with record_iterates
  std::vector<Vector> noise;          // w_k that produced each recorded state (k >= 1)
  CoupledSummary summary;
};

namespace detail {

inline ErrorNorms error_norms(const Vector& x, const Vector& xl, const Vector& xu, const Vector& xlu,
                              const Vector& xul) {
  auto inf = [](const Vector& v) { return v.lpNorm<Eigen::Infinity>(); };
  return {inf(x), x.norm(), inf(xl), xl.norm(), inf(xu), xu.norm(), inf(xlu), xlu.norm(), inf(xul), xul.norm()};
}

}  // namespace detail

/// Steps minimax Q-learning together with its four comparison systems. One
/// experience per step produces w_k from the original iterate; every other
/// system consumes that same w_k.
inline CoupledTrajectory run_coupled(const GameSpec& spec, const SamplingModel& model, double alpha,
                                     std::int64_t steps, std::uint64_t seed, const QTable& q0,
                                     const QTable& q_star, const CoupledOptions& opt = {}) {
  check_step_size(alpha);
  if (steps < 0) throw ParameterError("steps must be nonnegative");
  const int n = spec.dims.n();
  detail::check_length(q0, n, "Q_0");
  if (q0.lpNorm<Eigen::Infinity>() > 1.0) throw AssumptionViolation("||Q_0||_inf must be at most 1");
  const Occupation occ = occupation_frequency(model);
  const ComparisonContext ctx(spec, occ.d, alpha, q_star);
  const int stride = std::max(opt.stride, 1);
  const double rho = 1.0 - alpha * occ.d_min * (1.0 - spec.discount);
  const double b_bound = 2.0 * alpha * spec.discount * occ.d_max;

  CoupledTrajectory traj;
  CoupledSummary& sum = traj.summary;
  sum.q_max = q_max_bound(q0, spec.discount);

  QTable q = q0;
  Vector x0 = q0 - q_star;
  Vector xl = x0, xu = x0, xlu = x0, xul = x0;

  auto record = [&](std::int64_t k, int violations, const Vector* w) {
    traj.steps.push_back(k);
    traj.errors.push_back(detail::error_norms(q - q_star, xl, xu, xlu, xul));
    traj.order_violations.push_back(violations);
    if (opt.record_iterates) {
      traj.states.push_back({q, q_star + xl, q_star + xu, q_star + xlu, q_star + xul, q_star, k});
      traj.noise.push_back(w ? *w : Vector::Zero(n));
    }
  };
  sum.max_orig_norm = q.lpNorm<Eigen::Infinity>();
  record(0, 0, nullptr);

  const Matrix linear = opt.check_identities ? ctx.linear_matrix() : Matrix();
  Engine rng(seed);
  int pending = 0;
  for (std::int64_t k = 1; k <= steps; ++k) {
    const Experience e = sample_experience(spec, model, rng);
    const Vector x = q - q_star;
    const Vector w = noise_vector(q, e, spec, occ.d);

    SystemMatrices orig_form;
    ErrorSystemMatrices low_err, up_err;
    if (opt.check_identities) {
      orig_form = ql_system_matrices(q, q_star, spec, occ.d, alpha);
      low_err = error_system_matrices(ctx, xl, Side::Lower);
      up_err = error_system_matrices(ctx, xu, Side::Upper);
      for (const auto* m : {&low_err, &up_err}) {
        sum.max_A_norm_excess = std::max(sum.max_A_norm_excess, infinity_norm(m->A_mode) - rho);
        sum.max_B_norm_excess = std::max(sum.max_B_norm_excess, infinity_norm(m->B_mode) - b_bound);
      }
    }

    ql_update_in_place(q, e, spec, alpha);
    const Vector xl_next = step_lower(ctx, xl, w);
    const Vector xu_next = step_upper(ctx, xu, w);
    const Vector xlu_next = step_linear(ctx, xlu, w);
    const Vector xul_next = step_linear(ctx, xul, w);

    if (opt.check_identities) {
      const Vector via_matrix = orig_form.A * x + orig_form.b_affine + alpha * w;
      sum.max_original_form_residual =
          std::max(sum.max_original_form_residual, (via_matrix - (q - q_star)).lpNorm<Eigen::Infinity>());
      const Vector low_pred = low_err.A_mode * (xl - xlu) + low_err.B_mode * xlu;
      sum.max_error_residual_lower = std::max(
          sum.max_error_residual_lower, (low_pred - (xl_next - xlu_next)).lpNorm<Eigen::Infinity>());
      const Vector up_pred = up_err.A_mode * (xu - xul) + up_err.B_mode * xul;
      sum.max_error_residual_upper = std::max(
          sum.max_error_residual_upper, (up_pred - (xu_next - xul_next)).lpNorm<Eigen::Infinity>());
      sum.max_linear_residual = std::max(
          sum.max_linear_residual, (linear * xlu + alpha * w - xlu_next).lpNorm<Eigen::Infinity>());
    }

    xl = xl_next;
    xu = xu_next;
    xlu = xlu_next;
    xul = xul_next;

    const Vector xq = q - q_star;
    auto check = [&](Relation rel, const Vector& lo, const Vector& hi) {
      const double gap = (lo - hi).maxCoeff();
      if (gap > opt.order_tol) {
        const auto count = ((lo - hi).array() > opt.order_tol).count();
        sum.order_violations[rel] += count;
        pending += static_cast<int>(count);
      }
      sum.max_order_gap = std::max(sum.max_order_gap, gap);
    };
    check(kLowBelowOrig, xl, xq);
    check(kOrigBelowUp, xq, xu);
    check(kLowBelowLu, xl, xlu);
    check(kUlBelowUp, xul, xu);

    const double norm = q.lpNorm<Eigen::Infinity>();
    sum.max_orig_norm = std::max(sum.max_orig_norm, norm);
    if (norm > sum.q_max + kBoundSlack) ++sum.bound_violations;

    if (k % stride == 0 || k == steps) {
      record(k, pending, &w);
      pending = 0;
    }
  }
  return traj;
}

}  // namespace mmq
