#pragma once

// Deterministic constructors for the synthetic populations.

#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include <fmt/format.h>

#include "fairrec/core_model.hpp"
#include "fairrec/errors.hpp"

namespace fairrec {

struct PopulationRecipe {
  enum class Kind { TwoType, Homogeneous, Misestimation, Random };

  Kind kind = Kind::TwoType;
  std::vector<double> v;
  double alpha = 0.5;
  double beta = 0.25;
  std::size_t m = 10;
  std::size_t n = 0;  // Random only
  std::uint64_t seed = 0;
};

namespace detail {

inline std::size_t round_half_up(double x) {
  return static_cast<std::size_t>(std::floor(x + 0.5));
}

inline void check_values(const std::vector<double>& v) {
  if (v.empty()) throw ConfigError("value sequence must be nonempty");
  for (double x : v) {
    if (!(x > 0.0) || !std::isfinite(x)) throw ConfigError("values must be positive");
  }
}

// Fisher-Yates on the raw engine output so the permutation is identical on
// every standard library.
inline std::vector<std::size_t> seeded_permutation(std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = count; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

}  // namespace detail

// round(alpha m) users hold v, the rest hold reverse(v). Type ids 0 and 1.
inline UtilityMatrix gen_two_type(const std::vector<double>& v, double alpha, std::size_t m) {
  detail::check_values(v);
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  const std::size_t first = detail::round_half_up(alpha * static_cast<double>(m));
  if (first < 1 || first + 1 > m) {
    throw ConfigError(fmt::format("alpha = {} with m = {} leaves a type empty", alpha, m));
  }
  const std::vector<double> rev(v.rbegin(), v.rend());
  std::vector<std::vector<double>> rows;
  std::vector<int> types;
  for (std::size_t i = 0; i < m; ++i) {
    rows.push_back(i < first ? v : rev);
    types.push_back(i < first ? 0 : 1);
  }
  return UtilityMatrix::from_rows(rows, types);
}

inline UtilityMatrix gen_homogeneous(const std::vector<double>& v, std::size_t m) {
  detail::check_values(v);
  if (m < 1) throw ConfigError("need at least one user");
  return UtilityMatrix::from_rows(std::vector<std::vector<double>>(m, v),
                                  std::vector<int>(m, 0));
}

struct MisestPopulation {
  UtilityMatrix truth;
  UtilityMatrix estimate;
  std::vector<std::size_t> misestimated;  // ascending user indices
};

// round(beta m) users of each known type plus cold-start users whose
// estimated row is (v_j + v_{n-j+1}) / 2. Cold users' hidden true types
// alternate type 1, type 2, ...; the seed only permutes row order.
inline MisestPopulation gen_misestimation(const std::vector<double>& v, double beta,
                                          std::size_t m, std::uint64_t seed) {
  detail::check_values(v);
  if (!(beta > 0.0 && beta < 0.5)) throw ConfigError("beta must lie in (0, 1/2)");
  const std::size_t known = detail::round_half_up(beta * static_cast<double>(m));
  if (known < 1) throw ConfigError(fmt::format("beta = {} with m = {} leaves no known users",
                                               beta, m));
  if (2 * known + 1 > m) {
    throw ConfigError(fmt::format("beta = {} with m = {} leaves no cold-start users", beta, m));
  }
  const std::size_t n = v.size();
  const std::vector<double> rev(v.rbegin(), v.rend());
  std::vector<double> avg(n);
  for (std::size_t j = 0; j < n; ++j) avg[j] = 0.5 * (v[j] + v[n - 1 - j]);

  std::vector<std::vector<double>> truth_rows;
  std::vector<std::vector<double>> est_rows;
  std::vector<int> truth_types;
  std::vector<int> est_types;
  std::vector<bool> cold;
  for (std::size_t i = 0; i < m; ++i) {
    if (i < known) {
      truth_rows.push_back(v);
      est_rows.push_back(v);
      truth_types.push_back(0);
      est_types.push_back(0);
      cold.push_back(false);
    } else if (i < 2 * known) {
      truth_rows.push_back(rev);
      est_rows.push_back(rev);
      truth_types.push_back(1);
      est_types.push_back(1);
      cold.push_back(false);
    } else {
      const bool first_type = (i - 2 * known) % 2 == 0;
      truth_rows.push_back(first_type ? v : rev);
      truth_types.push_back(first_type ? 0 : 1);
      est_rows.push_back(avg);
      est_types.push_back(2);
      cold.push_back(true);
    }
  }

  const auto perm = detail::seeded_permutation(m, seed);
  std::vector<std::vector<double>> tr(m), er(m);
  std::vector<int> tt(m), et(m);
  MisestPopulation out;
  for (std::size_t i = 0; i < m; ++i) {
    tr[i] = truth_rows[perm[i]];
    er[i] = est_rows[perm[i]];
    tt[i] = truth_types[perm[i]];
    et[i] = est_types[perm[i]];
    if (cold[perm[i]]) out.misestimated.push_back(i);
  }
  out.truth = UtilityMatrix::from_rows(tr, tt);
  out.estimate = UtilityMatrix::from_rows(er, et);
  return out;
}

// Independent uniform utilities in [lo, hi]; every user is their own type.
inline UtilityMatrix gen_random(std::size_t m, std::size_t n, std::uint64_t seed,
                                double lo = 0.05, double hi = 1.0) {
  if (m < 1 || n < 1) throw ConfigError("random matrix needs m, n >= 1");
  if (!(lo > 0.0 && hi >= lo)) throw ConfigError("random utilities need 0 < lo <= hi");
  std::mt19937_64 rng(seed);
  std::vector<double> values(m * n);
  for (double& x : values) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    x = lo + (hi - lo) * u;
  }
  return UtilityMatrix(m, n, std::move(values));
}

inline UtilityMatrix generate(const PopulationRecipe& r) {
  switch (r.kind) {
    case PopulationRecipe::Kind::TwoType: return gen_two_type(r.v, r.alpha, r.m);
    case PopulationRecipe::Kind::Homogeneous: return gen_homogeneous(r.v, r.m);
    case PopulationRecipe::Kind::Misestimation:
      return gen_misestimation(r.v, r.beta, r.m, r.seed).truth;
    case PopulationRecipe::Kind::Random: return gen_random(r.m, r.n, r.seed);
  }
  throw ConfigError("unknown recipe");
}

}  // namespace fairrec
