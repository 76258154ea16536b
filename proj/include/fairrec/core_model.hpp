#pragma once

// Utility matrices, recommendation policies and the normalized user/item
// utilities every fairness measure is built from.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "fairrec/errors.hpp"

namespace fairrec {

inline constexpr double kRowSumTolerance = 1e-9;

// Strictly positive m x n matrix of user-item utilities, stored row-major.
class UtilityMatrix {
 public:
  UtilityMatrix() = default;

  UtilityMatrix(std::size_t m, std::size_t n, std::vector<double> values,
                std::optional<std::vector<int>> type_of = std::nullopt,
                std::vector<std::string> user_ids = {},
                std::vector<std::string> item_ids = {})
      : m_(m),
        n_(n),
        values_(std::move(values)),
        type_of_(std::move(type_of)),
        user_ids_(std::move(user_ids)),
        item_ids_(std::move(item_ids)) {
    validate();
  }

  static UtilityMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                 std::optional<std::vector<int>> type_of = std::nullopt) {
    if (rows.empty()) throw ConfigError("utility matrix needs at least one user");
    const std::size_t n = rows.front().size();
    std::vector<double> flat;
    flat.reserve(rows.size() * n);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != n) {
        throw ConfigError(fmt::format("ragged utility matrix: row {} has {} entries, expected {}",
                                      i, rows[i].size(), n));
      }
      flat.insert(flat.end(), rows[i].begin(), rows[i].end());
    }
    return UtilityMatrix(rows.size(), n, std::move(flat), std::move(type_of));
  }

  std::size_t users() const { return m_; }
  std::size_t items() const { return n_; }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(values_).subspan(i * n_, n_);
  }

  const std::vector<double>& values() const { return values_; }
  const std::optional<std::vector<int>>& type_of() const { return type_of_; }

  std::string user_id(std::size_t i) const {
    return user_ids_.empty() ? fmt::format("u{}", i) : user_ids_[i];
  }
  std::string item_id(std::size_t j) const {
    return item_ids_.empty() ? fmt::format("i{}", j) : item_ids_[j];
  }
  const std::vector<std::string>& user_ids() const { return user_ids_; }
  const std::vector<std::string>& item_ids() const { return item_ids_; }

  double row_max(std::size_t i) const {
    auto r = row(i);
    return *std::max_element(r.begin(), r.end());
  }

  double column_sum(std::size_t j) const {
    double s = 0.0;
    for (std::size_t i = 0; i < m_; ++i) s += (*this)(i, j);
    return s;
  }

  bool row_equals(std::size_t a, std::size_t b) const {
    auto ra = row(a);
    auto rb = row(b);
    return std::equal(ra.begin(), ra.end(), rb.begin());
  }

 private:
  void validate() const {
    if (m_ == 0 || n_ == 0) throw ConfigError("utility matrix needs m >= 1 and n >= 1");
    if (values_.size() != m_ * n_) {
      throw ConfigError(fmt::format("utility matrix has {} values, expected {}x{}",
                                    values_.size(), m_, n_));
    }
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = 0; j < n_; ++j) {
        const double v = values_[i * n_ + j];
        if (!(v > 0.0) || !std::isfinite(v)) {
          throw ConfigError(fmt::format(
              "utility at user {} item {} must be strictly positive and finite, got {}", i, j, v));
        }
      }
    }
    if (type_of_) {
      if (type_of_->size() != m_) throw ConfigError("type_of must have one entry per user");
      for (std::size_t a = 0; a < m_; ++a) {
        for (std::size_t b = a + 1; b < m_; ++b) {
          if ((*type_of_)[a] == (*type_of_)[b] && !row_equals(a, b)) {
            throw ConfigError(
                fmt::format("users {} and {} share a type but have different rows", a, b));
          }
        }
      }
    }
    if (!user_ids_.empty() && user_ids_.size() != m_) {
      throw ConfigError("user id count does not match m");
    }
    if (!item_ids_.empty() && item_ids_.size() != n_) {
      throw ConfigError("item id count does not match n");
    }
  }

  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<double> values_;
  std::optional<std::vector<int>> type_of_;
  std::vector<std::string> user_ids_;
  std::vector<std::string> item_ids_;
};

// Per-user (or per-type, when reduced) distribution over items.
class RecommendationPolicy {
 public:
  RecommendationPolicy() = default;

  RecommendationPolicy(std::size_t rows, std::size_t n, std::vector<double> probs,
                       bool reduced = false)
      : rows_(rows), n_(n), probs_(std::move(probs)), reduced_(reduced) {
    if (probs_.size() != rows_ * n_) throw ConfigError("policy size does not match rows x n");
    for (std::size_t r = 0; r < rows_; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        const double p = probs_[r * n_ + j];
        if (!(p >= 0.0 && p <= 1.0)) {
          throw ConfigError(fmt::format("policy entry ({}, {}) = {} outside [0, 1]", r, j, p));
        }
        s += p;
      }
      if (std::abs(s - 1.0) > kRowSumTolerance) {
        throw ConfigError(fmt::format("policy row {} sums to {}, not 1", r, s));
      }
    }
  }

  // Clamps solver noise (tiny negatives) and rescales each row to sum to one.
  static RecommendationPolicy renormalized(std::size_t rows, std::size_t n,
                                           std::vector<double> raw, bool reduced = false) {
    if (raw.size() != rows * n) throw ConfigError("policy size does not match rows x n");
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        double& p = raw[r * n + j];
        p = std::max(p, 0.0);
        s += p;
      }
      if (!(s > 0.0)) throw SolverError(fmt::format("policy row {} has no mass", r));
      for (std::size_t j = 0; j < n; ++j) raw[r * n + j] = std::min(raw[r * n + j] / s, 1.0);
    }
    return RecommendationPolicy(rows, n, std::move(raw), reduced);
  }

  static RecommendationPolicy uniform(std::size_t rows, std::size_t n) {
    return RecommendationPolicy(rows, n, std::vector<double>(rows * n, 1.0 / n));
  }

  std::size_t rows() const { return rows_; }
  std::size_t items() const { return n_; }
  bool reduced() const { return reduced_; }
  double operator()(std::size_t r, std::size_t j) const { return probs_[r * n_ + j]; }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(probs_).subspan(r * n_, n_);
  }
  const std::vector<double>& values() const { return probs_; }

 private:
  std::size_t rows_ = 0;
  std::size_t n_ = 0;
  std::vector<double> probs_;
  bool reduced_ = false;
};

struct FairnessMeasure {
  enum class Kind { MaxMin, NashWelfare, SumKMin };

  Kind kind = Kind::MaxMin;
  std::size_t k = 1;  // only read for SumKMin

  static FairnessMeasure max_min() { return {Kind::MaxMin, 1}; }
  static FairnessMeasure nash() { return {Kind::NashWelfare, 1}; }
  static FairnessMeasure sum_k_min(std::size_t k) {
    if (k == 0) throw ConfigError("sum-k-min needs k >= 1");
    return {Kind::SumKMin, k};
  }

  bool operator==(const FairnessMeasure&) const = default;
};

inline std::string to_string(FairnessMeasure::Kind kind) {
  switch (kind) {
    case FairnessMeasure::Kind::MaxMin: return "maxmin";
    case FairnessMeasure::Kind::NashWelfare: return "nash";
    case FairnessMeasure::Kind::SumKMin: return "sumkmin";
  }
  return "unknown";
}

inline std::string to_string(const FairnessMeasure& m) {
  if (m.kind == FairnessMeasure::Kind::SumKMin) return fmt::format("sumkmin(k={})", m.k);
  return to_string(m.kind);
}

// Item-side utilities interpolated between the user utilities (delta = 0) and
// pure exposure (delta = 1).
struct ItemUtilityModel {
  double delta = 0.0;

  static ItemUtilityModel symmetric() { return {0.0}; }
  static ItemUtilityModel exposure() { return {1.0}; }

  void validate() const {
    if (!(delta >= 0.0 && delta <= 1.0)) {
      throw ConfigError(fmt::format("item utility delta must lie in [0, 1], got {}", delta));
    }
  }
};

inline UtilityMatrix apply_item_utility_model(const UtilityMatrix& w, ItemUtilityModel model) {
  model.validate();
  if (model.delta == 0.0) return w;
  std::vector<double> out(w.values());
  for (double& v : out) v = model.delta + (1.0 - model.delta) * v;
  return UtilityMatrix(w.users(), w.items(), std::move(out), w.type_of(), w.user_ids(),
                       w.item_ids());
}

namespace detail {

inline void check_shapes(const RecommendationPolicy& policy, const UtilityMatrix& w) {
  if (policy.rows() != w.users() || policy.items() != w.items()) {
    throw ConfigError(fmt::format("policy shape {}x{} does not match utility matrix {}x{}",
                                  policy.rows(), policy.items(), w.users(), w.items()));
  }
}

}  // namespace detail

// Aggregates a list of normalized utilities under a fairness measure.
// `weights` are multiplicities (type counts); empty means one each.
inline double aggregate_fairness(std::span<const double> utilities, const FairnessMeasure& measure,
                                 std::span<const double> weights = {}) {
  if (utilities.empty()) throw ConfigError("cannot aggregate an empty utility list");
  if (!weights.empty() && weights.size() != utilities.size()) {
    throw ConfigError("weights must match utilities");
  }
  auto weight = [&](std::size_t r) { return weights.empty() ? 1.0 : weights[r]; };
  switch (measure.kind) {
    case FairnessMeasure::Kind::MaxMin:
      return *std::min_element(utilities.begin(), utilities.end());
    case FairnessMeasure::Kind::NashWelfare: {
      double s = 0.0;
      for (std::size_t r = 0; r < utilities.size(); ++r) {
        if (!(utilities[r] > 0.0)) {
          throw DomainError(fmt::format("Nash welfare undefined: utility {} is {}", r, utilities[r]));
        }
        s += weight(r) * std::log(utilities[r]);
      }
      return s;
    }
    case FairnessMeasure::Kind::SumKMin: {
      double total = 0.0;
      for (std::size_t r = 0; r < utilities.size(); ++r) total += weight(r);
      if (static_cast<double>(measure.k) > total + 1e-9) {
        throw ConfigError(fmt::format("sum-k-min with k = {} exceeds population {}", measure.k,
                                      total));
      }
      std::vector<std::size_t> order(utilities.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return utilities[a] < utilities[b]; });
      double remaining = static_cast<double>(measure.k);
      double s = 0.0;
      for (std::size_t r : order) {
        const double take = std::min(remaining, weight(r));
        s += take * utilities[r];
        remaining -= take;
        if (remaining <= 0.0) break;
      }
      return s;
    }
  }
  return 0.0;
}

inline double normalized_user_utility(const RecommendationPolicy& policy, const UtilityMatrix& w,
                                      std::size_t i) {
  detail::check_shapes(policy, w);
  if (i >= w.users()) throw ConfigError(fmt::format("user index {} out of range", i));
  double s = 0.0;
  for (std::size_t j = 0; j < w.items(); ++j) s += policy(i, j) * w(i, j);
  return s / w.row_max(i);
}

inline std::vector<double> normalized_user_utilities(const RecommendationPolicy& policy,
                                                     const UtilityMatrix& w) {
  detail::check_shapes(policy, w);
  std::vector<double> out(w.users());
  for (std::size_t i = 0; i < w.users(); ++i) out[i] = normalized_user_utility(policy, w, i);
  return out;
}

namespace detail {

inline double item_utility_on(const RecommendationPolicy& policy, const UtilityMatrix& wi,
                              std::size_t j) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < wi.users(); ++i) {
    num += policy(i, j) * wi(i, j);
    den += wi(i, j);
  }
  return num / den;
}

}  // namespace detail

inline double normalized_item_utility(const RecommendationPolicy& policy, const UtilityMatrix& w,
                                      ItemUtilityModel model, std::size_t j) {
  detail::check_shapes(policy, w);
  if (j >= w.items()) throw ConfigError(fmt::format("item index {} out of range", j));
  return detail::item_utility_on(policy, apply_item_utility_model(w, model), j);
}

inline std::vector<double> normalized_item_utilities(const RecommendationPolicy& policy,
                                                     const UtilityMatrix& w,
                                                     ItemUtilityModel model) {
  detail::check_shapes(policy, w);
  const UtilityMatrix wi = apply_item_utility_model(w, model);
  std::vector<double> out(w.items());
  for (std::size_t j = 0; j < w.items(); ++j) out[j] = detail::item_utility_on(policy, wi, j);
  return out;
}

inline double user_fairness(const RecommendationPolicy& policy, const UtilityMatrix& w,
                            const FairnessMeasure& measure) {
  return aggregate_fairness(normalized_user_utilities(policy, w), measure);
}

inline double item_fairness(const RecommendationPolicy& policy, const UtilityMatrix& w,
                            ItemUtilityModel model, const FairnessMeasure& measure) {
  return aggregate_fairness(normalized_item_utilities(policy, w, model), measure);
}

// Deterministic policy recommending each user the first of their top items.
inline RecommendationPolicy favorite_item_policy(const UtilityMatrix& w) {
  std::vector<double> p(w.users() * w.items(), 0.0);
  for (std::size_t i = 0; i < w.users(); ++i) {
    auto r = w.row(i);
    const auto best = static_cast<std::size_t>(std::max_element(r.begin(), r.end()) - r.begin());
    p[i * w.items() + best] = 1.0;
  }
  return RecommendationPolicy(w.users(), w.items(), std::move(p));
}

}  // namespace fairrec
