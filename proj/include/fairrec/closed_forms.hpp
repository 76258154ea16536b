#pragma once

// Analytic solutions for the structured populations: two opposing user types,
// and the cold-start population where a third group carries the averaged
// prior. These are the oracles the LP path is validated against.
//
// Item indices are 0-based in vectors; pivot indices are reported 1-based so
// they read the same as the usual t in the derivations.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <fmt/format.h>

#include "fairrec/errors.hpp"

namespace fairrec {

namespace detail {

inline void check_strictly_decreasing(const std::vector<double>& v) {
  if (v.empty()) throw ConfigError("value sequence must be nonempty");
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (!(v[j] > 0.0) || !std::isfinite(v[j])) {
      throw ConfigError(fmt::format("value v[{}] = {} must be positive", j, v[j]));
    }
    if (j > 0 && !(v[j] < v[j - 1])) {
      throw ConfigError("values must be strictly decreasing");
    }
  }
}

inline constexpr double kPivotTolerance = 1e-12;

}  // namespace detail

struct TwoTypeSpec {
  std::vector<double> v;  // type 1 row; type 2 holds the reversal
  double alpha = 0.5;     // fraction of type-1 users

  std::size_t items() const { return v.size(); }

  void validate() const {
    detail::check_strictly_decreasing(v);
    if (!(alpha > 0.0 && alpha < 1.0)) {
      throw ConfigError(fmt::format("alpha must lie in (0, 1), got {}", alpha));
    }
  }
};

struct MisestSpec {
  std::vector<double> v;
  double beta = 0.25;  // fraction of each correctly estimated type

  std::size_t items() const { return v.size(); }
  bool starvation_regime() const { return beta > 1.0 / static_cast<double>(v.size()); }

  void validate() const {
    detail::check_strictly_decreasing(v);
    if (v.size() < 2) throw ConfigError("misestimation setting needs n >= 2");
    if (!(beta > 0.0 && beta < 0.5)) {
      throw ConfigError(fmt::format("beta must lie in (0, 1/2), got {}", beta));
    }
  }
};

struct TwoTypeSolution {
  std::size_t t = 1;  // pivot, 1-based
  std::vector<double> q;
  double L = 0.0;
  double R = 0.0;
  double if_star = 0.0;
  std::vector<double> x;  // type-1 policy
  std::vector<double> y;  // type-2 policy
  double uf1 = 0.0;       // best min normalized user utility at maximal item fairness
  double pof = 0.0;
};

// q_j = alpha v_j / (alpha v_j + (1 - alpha) v_{n-j+1}): type 1's share of
// item j's total value.
inline std::vector<double> q_weights(const TwoTypeSpec& spec) {
  spec.validate();
  const std::size_t n = spec.items();
  std::vector<double> q(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = spec.alpha * spec.v[j];
    q[j] = a / (a + (1.0 - spec.alpha) * spec.v[n - 1 - j]);
  }
  return q;
}

namespace detail {

struct TwoTypeCandidate {
  bool valid = false;
  TwoTypeSolution sol;
};

// Sparse equal-item-utility solution assuming the pivot is `t` (1-based).
inline TwoTypeCandidate two_type_candidate(const std::vector<double>& q, std::size_t t) {
  const std::size_t n = q.size();
  const std::size_t p = t - 1;
  TwoTypeCandidate c;
  TwoTypeSolution& s = c.sol;
  s.t = t;
  s.q = q;
  for (std::size_t j = 0; j < p; ++j) s.L += 1.0 / q[j];
  for (std::size_t j = p + 1; j < n; ++j) s.R += 1.0 / (1.0 - q[j]);
  const double denom = 1.0 + q[p] * s.L + (1.0 - q[p]) * s.R;
  s.if_star = 1.0 / denom;
  s.x.assign(n, 0.0);
  s.y.assign(n, 0.0);
  for (std::size_t j = 0; j < p; ++j) s.x[j] = s.if_star / q[j];
  for (std::size_t j = p + 1; j < n; ++j) s.y[j] = s.if_star / (1.0 - q[j]);
  s.x[p] = 1.0 - s.L / denom;
  s.y[p] = 1.0 - s.R / denom;
  c.valid = s.x[p] >= -kPivotTolerance && s.y[p] >= -kPivotTolerance;
  s.x[p] = std::max(s.x[p], 0.0);
  s.y[p] = std::max(s.y[p], 0.0);
  return c;
}

inline TwoTypeSolution best_two_type_candidate(const TwoTypeSpec& spec) {
  const std::vector<double> q = q_weights(spec);
  bool found = false;
  TwoTypeSolution best;
  for (std::size_t t = 1; t <= q.size(); ++t) {
    auto c = two_type_candidate(q, t);
    if (!c.valid) continue;
    if (!found || c.sol.if_star > best.if_star + kPivotTolerance) {
      best = std::move(c.sol);
      found = true;
    }
  }
  if (!found) throw SolverError("no valid pivot for two-type population");
  return best;
}

}  // namespace detail

// Number of pivots 1..n whose sparse candidate is a valid pair of simplex
// vectors. Exposed for uniqueness checks.
inline std::size_t two_type_valid_pivot_count(const TwoTypeSpec& spec) {
  const std::vector<double> q = q_weights(spec);
  std::size_t count = 0;
  for (std::size_t t = 1; t <= q.size(); ++t) count += detail::two_type_candidate(q, t).valid;
  return count;
}

inline std::size_t two_type_pivot(const TwoTypeSpec& spec) {
  return detail::best_two_type_candidate(spec).t;
}

inline TwoTypeSolution two_type_solution(const TwoTypeSpec& spec) {
  TwoTypeSolution s = detail::best_two_type_candidate(spec);
  const std::size_t n = spec.items();
  const double top = spec.v.front();
  double u1 = 0.0;
  double u2 = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    u1 += s.x[j] * spec.v[j];
    u2 += s.y[j] * spec.v[n - 1 - j];
  }
  s.uf1 = std::min(u1, u2) / top;
  s.pof = 1.0 - s.uf1;
  return s;
}

inline std::vector<double> two_type_pof_curve(const std::vector<double>& v,
                                              const std::vector<double>& alpha_grid) {
  std::vector<double> out;
  out.reserve(alpha_grid.size());
  for (double a : alpha_grid) out.push_back(two_type_solution({v, a}).pof);
  return out;
}

// True when the t = 1 candidate of the misestimated problem has z_1 < 0,
// i.e. v_n / v_1 < (n - 2) / (1 / (2 beta) - 1) - 1.
inline bool misest_t1_excluded(const MisestSpec& spec) {
  spec.validate();
  const double n = static_cast<double>(spec.items());
  const double ratio = spec.v.back() / spec.v.front();
  return ratio < (n - 2.0) / (1.0 / (2.0 * spec.beta) - 1.0) - 1.0;
}

struct MisestSolution {
  std::size_t t = 1;  // pivot, 1-based, at most floor((n + 1) / 2)
  std::vector<double> q;
  double L = 0.0;
  double lambda = 0.0;  // common item utility = IF* of the estimated problem
  std::vector<double> x;
  std::vector<double> y;  // reverse(x)
  std::vector<double> z;  // cold-start users, palindromic
};

namespace detail {

struct MisestCandidate {
  bool valid = false;
  MisestSolution sol;
};

inline MisestCandidate misest_candidate(const MisestSpec& spec, const std::vector<double>& q,
                                        std::size_t t) {
  const std::size_t n = spec.items();
  const std::size_t p = t - 1;
  const double b2 = 2.0 * spec.beta;
  const double cold = 1.0 - b2;
  MisestCandidate c;
  MisestSolution& s = c.sol;
  s.t = t;
  s.q = q;
  for (std::size_t j = 0; j < p; ++j) s.L += 1.0 / q[j];
  s.x.assign(n, 0.0);
  s.z.assign(n, 0.0);

  const bool middle = (n % 2 == 1) && (2 * t == n + 1);
  if (middle) {
    // Middle item is fed by both known types (y_t = x_t) plus every cold
    // user: 2 beta x_t + (1 - 2 beta) = lambda with x_t = 1 - lambda L / (2 beta).
    s.lambda = 1.0 / (1.0 + s.L);
    s.z[p] = 1.0;
  } else {
    if (cold < 1e-12) throw ConfigError("misestimated fraction 1 - 2 beta is too small");
    s.lambda = (b2 * q[p] + 0.5 * cold) /
               (1.0 + q[p] * s.L + 0.5 * (static_cast<double>(n) - 2.0 * static_cast<double>(t)));
    const double inner = s.lambda / cold;
    const double edge =
        0.5 * (1.0 - (static_cast<double>(n) - 2.0 * static_cast<double>(t)) * inner);
    for (std::size_t j = p + 1; j + p + 1 < n; ++j) s.z[j] = inner;
    s.z[p] = edge;
    s.z[n - 1 - p] = edge;
  }
  for (std::size_t j = 0; j < p; ++j) s.x[j] = s.lambda / (b2 * q[j]);
  s.x[p] = 1.0 - s.lambda * s.L / b2;

  c.valid = s.x[p] >= -kPivotTolerance && s.z[p] >= -kPivotTolerance;
  for (double zj : s.z) c.valid = c.valid && zj <= 1.0 + kPivotTolerance;
  s.x[p] = std::max(s.x[p], 0.0);
  s.z[p] = std::max(s.z[p], 0.0);
  s.z[n - 1 - p] = std::max(s.z[n - 1 - p], 0.0);
  s.y.assign(s.x.rbegin(), s.x.rend());
  return c;
}

inline std::vector<double> misest_q(const MisestSpec& spec) {
  // q at alpha = 1/2: the two known types have equal mass.
  const std::size_t n = spec.items();
  std::vector<double> q(n);
  for (std::size_t j = 0; j < n; ++j) q[j] = spec.v[j] / (spec.v[j] + spec.v[n - 1 - j]);
  return q;
}

inline MisestSolution best_misest_candidate(const MisestSpec& spec) {
  spec.validate();
  const std::vector<double> q = misest_q(spec);
  const std::size_t half = (spec.items() + 1) / 2;
  bool found = false;
  MisestSolution best;
  for (std::size_t t = 1; t <= half; ++t) {
    auto c = misest_candidate(spec, q, t);
    if (!c.valid) continue;
    if (!found || c.sol.lambda > best.lambda + kPivotTolerance) {
      best = std::move(c.sol);
      found = true;
    }
  }
  if (!found) throw SolverError("no valid pivot for misestimated population");
  return best;
}

}  // namespace detail

inline std::size_t misest_valid_pivot_count(const MisestSpec& spec) {
  spec.validate();
  const std::vector<double> q = detail::misest_q(spec);
  std::size_t count = 0;
  for (std::size_t t = 1; t <= (spec.items() + 1) / 2; ++t) {
    count += detail::misest_candidate(spec, q, t).valid;
  }
  return count;
}

inline std::size_t misest_pivot(const MisestSpec& spec) {
  return detail::best_misest_candidate(spec).t;
}

inline MisestSolution misest_solution(const MisestSpec& spec) {
  return detail::best_misest_candidate(spec);
}

// Item utilities of a misestimation-setting policy (x, y, z) on the
// estimated matrix: 2 beta (q_j x_j + (1 - q_j) y_j) + (1 - 2 beta) z_j.
inline std::vector<double> misest_item_utilities(const MisestSpec& spec,
                                                 const std::vector<double>& x,
                                                 const std::vector<double>& y,
                                                 const std::vector<double>& z) {
  const std::vector<double> q = detail::misest_q(spec);
  std::vector<double> out(q.size());
  for (std::size_t j = 0; j < q.size(); ++j) {
    out[j] = 2.0 * spec.beta * (q[j] * x[j] + (1.0 - q[j]) * y[j]) + (1.0 - 2.0 * spec.beta) * z[j];
  }
  return out;
}

}  // namespace fairrec
