#pragma once

// Test fixtures and brute-force oracles. The oracles index tables with their
// own arithmetic and nested loops so they stay independent of the library's
// selector machinery.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mmq/mmq.hpp"

namespace mmq::testing {

// Single-state matching pennies with a self loop: R = [1,-1,-1,1], gamma 0.5.
inline GameSpec mp2(double gamma = 0.5) {
  GameSpec g;
  g.dims = {2, 2, 1};
  g.transition = Matrix::Ones(4, 1);
  g.reward.resize(4);
  g.reward << 1.0, -1.0, -1.0, 1.0;
  g.discount = gamma;
  return g;
}

inline QTable mp2_q_star() {
  QTable q(4);
  q << 0.0, -2.0, -2.0, 0.0;
  return q;
}

namespace oracle {

inline int idx(int a, int b, int s, const Dims& d) {
  return a * d.actions_adv * d.states + b * d.states + s;
}

inline std::vector<double> maxmin(const Vector& q, const Dims& d) {
  std::vector<double> out(d.states);
  for (int s = 0; s < d.states; ++s) {
    double best = -INFINITY;
    for (int a = 0; a < d.actions_user; ++a) {
      double worst = INFINITY;
      for (int b = 0; b < d.actions_adv; ++b) worst = std::min(worst, q[idx(a, b, s, d)]);
      best = std::max(best, worst);
    }
    out[s] = best;
  }
  return out;
}

// min over b per (s, a), ordered a-major then s.
inline std::vector<double> min_over_b(const Vector& q, const Dims& d) {
  std::vector<double> out;
  for (int a = 0; a < d.actions_user; ++a) {
    for (int s = 0; s < d.states; ++s) {
      double worst = INFINITY;
      for (int b = 0; b < d.actions_adv; ++b) worst = std::min(worst, q[idx(a, b, s, d)]);
      out.push_back(worst);
    }
  }
  return out;
}

// (F Q)(s,a,b) = R(s,a,b) + gamma sum_s' P(s'|s,a,b) max_a' min_b' Q(s',a',b').
inline Vector bellman(const Vector& q, const GameSpec& g) {
  const Dims& d = g.dims;
  const auto v = maxmin(q, d);
  Vector out(d.n());
  for (int a = 0; a < d.actions_user; ++a) {
    for (int b = 0; b < d.actions_adv; ++b) {
      for (int s = 0; s < d.states; ++s) {
        double acc = 0.0;
        for (int s2 = 0; s2 < d.states; ++s2) acc += g.transition(idx(a, b, s, d), s2) * v[s2];
        out[idx(a, b, s, d)] = g.reward[idx(a, b, s, d)] + g.discount * acc;
      }
    }
  }
  return out;
}

struct NoiseMoments {
  Vector mean;
  double second = 0.0;    // E[w^T w]
  double mean_l2 = 0.0;   // E[||w||_2]
  double mean_inf = 0.0;  // E[||w||_inf]
};

// Exact conditional moments of the noise by enumerating every (s,a,b,s').
// w is assembled term by term from its defining expression.
inline NoiseMoments noise_moments(const Vector& q, const GameSpec& g, const SamplingModel& m) {
  const Dims& d = g.dims;
  const int n = d.n();
  const auto v = maxmin(q, d);
  Vector dvec(n);
  Vector drift(n);
  for (int a = 0; a < d.actions_user; ++a) {
    for (int b = 0; b < d.actions_adv; ++b) {
      for (int s = 0; s < d.states; ++s) {
        const int i = idx(a, b, s, d);
        dvec[i] = m.state_dist[s] * m.user_policy(s, a) * m.adv_policy(s, b);
        double pv = 0.0;
        for (int s2 = 0; s2 < d.states; ++s2) pv += g.transition(i, s2) * v[s2];
        drift[i] = dvec[i] * (g.reward[i] + g.discount * pv - q[i]);
      }
    }
  }
  NoiseMoments out;
  out.mean = Vector::Zero(n);
  for (int i = 0; i < n; ++i) {
    for (int s2 = 0; s2 < d.states; ++s2) {
      const double weight = dvec[i] * g.transition(i, s2);
      if (weight == 0.0) continue;
      Vector w = -drift;
      w[i] += g.reward[i] + g.discount * v[s2] - q[i];
      out.mean += weight * w;
      out.second += weight * w.squaredNorm();
      out.mean_l2 += weight * w.norm();
      out.mean_inf += weight * w.lpNorm<Eigen::Infinity>();
    }
  }
  return out;
}

}  // namespace oracle

inline Vector random_vector(int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vector v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

}  // namespace mmq::testing
