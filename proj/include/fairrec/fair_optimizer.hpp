#pragma once

// Item-fair and user-fair optimal policies, tradeoff sweeps, and the two
// fairness prices. All solves run in type space: users with identical rows
// share one policy row, weighted by the type count.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <future>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "fairrec/core_model.hpp"
#include "fairrec/errors.hpp"
#include "fairrec/lp_engine.hpp"
#include "fairrec/nash_solver.hpp"

namespace fairrec {

enum class TieBreak { SolverDefault, CanonicalSymmetric };

inline std::string to_string(TieBreak t) {
  return t == TieBreak::SolverDefault ? "solver" : "canonical";
}

struct TypeReduction {
  UtilityMatrix typed;                    // K x n, one row per type
  std::vector<double> counts;             // users per type
  std::vector<std::size_t> type_of_user;  // user -> type index

  std::size_t types() const { return counts.size(); }
};

// Types come from type_of when present, otherwise from exact row equality;
// type indices follow first appearance.
inline TypeReduction reduce_by_types(const UtilityMatrix& w) {
  const std::size_t m = w.users();
  const std::size_t n = w.items();
  TypeReduction out;
  out.type_of_user.resize(m);
  std::vector<std::size_t> representative;
  if (w.type_of()) {
    std::map<int, std::size_t> index;
    for (std::size_t i = 0; i < m; ++i) {
      const auto [it, inserted] = index.emplace((*w.type_of())[i], representative.size());
      if (inserted) representative.push_back(i);
      out.type_of_user[i] = it->second;
    }
  } else {
    std::map<std::vector<double>, std::size_t> index;
    for (std::size_t i = 0; i < m; ++i) {
      const auto r = w.row(i);
      const auto [it, inserted] =
          index.emplace(std::vector<double>(r.begin(), r.end()), representative.size());
      if (inserted) representative.push_back(i);
      out.type_of_user[i] = it->second;
    }
  }
  out.counts.assign(representative.size(), 0.0);
  for (std::size_t i = 0; i < m; ++i) out.counts[out.type_of_user[i]] += 1.0;
  std::vector<double> values;
  values.reserve(representative.size() * n);
  for (std::size_t r : representative) {
    const auto row = w.row(r);
    values.insert(values.end(), row.begin(), row.end());
  }
  out.typed = UtilityMatrix(representative.size(), n, std::move(values));
  return out;
}

// One type per user, for solving without the reduction.
inline TypeReduction identity_reduction(const UtilityMatrix& w) {
  TypeReduction out;
  out.typed = UtilityMatrix(w.users(), w.items(), w.values());
  out.counts.assign(w.users(), 1.0);
  out.type_of_user.resize(w.users());
  for (std::size_t i = 0; i < w.users(); ++i) out.type_of_user[i] = i;
  return out;
}

inline RecommendationPolicy expand_policy(const RecommendationPolicy& typed,
                                          const TypeReduction& red) {
  const std::size_t n = typed.items();
  if (typed.rows() != red.types()) throw ConfigError("typed policy does not match reduction");
  std::vector<double> p;
  p.reserve(red.type_of_user.size() * n);
  for (std::size_t k : red.type_of_user) {
    const auto r = typed.row(k);
    p.insert(p.end(), r.begin(), r.end());
  }
  return RecommendationPolicy(red.type_of_user.size(), n, std::move(p));
}

struct OptimizerOptions {
  bool reduce_types = true;
  TieBreak tie_break = TieBreak::SolverDefault;
  LPTolerances lp;
  NashOptions nash;
  // Linear item constraints use gamma IF* - if_margin. Kept tiny: with steep
  // tradeoffs any slack is amplified into visible policy mass.
  double if_margin = 1e-12;
  double log_margin = 1e-9;  // Nash uses sum log I >= bound - log_margin
};

struct FairSolution {
  double value = 0.0;
  RecommendationPolicy policy;        // m x n
  RecommendationPolicy typed_policy;  // K x n
  bool is_vertex = false;
  std::vector<double> raw_point;      // type-space solver output before renormalization
  std::optional<double> gap;          // Nash certificate
};

namespace detail {

inline std::vector<double> padded(const std::vector<double>& c, std::size_t size) {
  std::vector<double> out = c;
  out.resize(size, 0.0);
  return out;
}

inline std::vector<LinearRow> padded(std::vector<LinearRow> rows, std::size_t size) {
  for (auto& r : rows) r.coeffs.resize(size, 0.0);
  return rows;
}

inline void ensure_bounds(LPInstance& lp) {
  if (lp.bounds.size() < lp.num_vars) lp.bounds.resize(lp.num_vars, VarBounds{});
}

// Leximin point over the first `nvars` variables of the optimal face of
// `lifted`, by progressive filling. The face keeps the objective within a
// small slack of `value`.
inline std::vector<double> leximin_point(const LPInstance& lifted, double value,
                                         std::size_t nvars, const LPTolerances& tol) {
  LPInstance face = lifted;
  ensure_bounds(face);
  face.add(face.objective, Relation::GreaterEqual, value - 1e-11 * (1.0 + std::abs(value)));
  std::fill(face.objective.begin(), face.objective.end(), 0.0);

  constexpr double kFreeze = 1e-8;
  std::vector<std::optional<double>> level(nvars);
  std::vector<double> last;
  auto with_levels = [&]() {
    LPInstance lp = face;
    for (std::size_t i = 0; i < nvars; ++i) {
      if (level[i]) lp.bounds[i].lower = std::max(lp.bounds[i].lower, *level[i] - 1e-10);
    }
    return lp;
  };
  std::size_t unfrozen = nvars;
  while (unfrozen > 0) {
    LPInstance lp = with_levels();
    const std::size_t z = lp.add_vars(1, VarBounds{-kInfinity, kInfinity});
    lp.objective[z] = 1.0;
    for (std::size_t i = 0; i < nvars; ++i) {
      if (level[i]) continue;
      std::vector<double> a(lp.num_vars, 0.0);
      a[i] = 1.0;
      a[z] = -1.0;
      lp.add(std::move(a), Relation::GreaterEqual, 0.0);
    }
    const auto sol = solve_lp(lp, tol);
    if (!sol.optimal()) {
      throw SolverError("canonical tie-break LP failed: " + to_string(sol.status));
    }
    const double zs = sol.value;
    last = sol.point;

    std::vector<std::size_t> newly;
    for (std::size_t i = 0; i < nvars; ++i) {
      if (level[i] || sol.point[i] > zs + kFreeze) continue;
      LPInstance probe = with_levels();
      for (std::size_t j = 0; j < nvars; ++j) {
        if (!level[j]) probe.bounds[j].lower = std::max(probe.bounds[j].lower, zs - 1e-10);
      }
      probe.objective.assign(probe.num_vars, 0.0);
      probe.objective[i] = 1.0;
      const auto ps = solve_lp(probe, tol);
      if (!ps.optimal()) {
        throw SolverError("canonical tie-break probe failed: " + to_string(ps.status));
      }
      if (ps.value <= zs + kFreeze) newly.push_back(i);
    }
    if (newly.empty()) {
      for (std::size_t i = 0; i < nvars; ++i) {
        if (!level[i] && sol.point[i] <= zs + kFreeze) newly.push_back(i);
      }
    }
    for (std::size_t i : newly) level[i] = std::max(zs, 0.0);
    unfrozen -= newly.size();
  }
  last.resize(nvars);
  return last;
}

}  // namespace detail

class FairProblem {
 public:
  FairProblem(const UtilityMatrix& w, ItemUtilityModel model, FairnessMeasure measure,
              OptimizerOptions opt = {})
      : w_(w), model_(model), measure_(measure), opt_(opt) {
    model_.validate();
    red_ = opt_.reduce_types ? reduce_by_types(w_) : identity_reduction(w_);
    if (measure_.kind == FairnessMeasure::Kind::SumKMin) {
      if (measure_.k < 1) throw ConfigError("sum-k-min needs k >= 1");
      if (measure_.k > w_.items()) {
        throw ConfigError(fmt::format("item-side sum-k-min needs k <= n = {}", w_.items()));
      }
      if (measure_.k > w_.users()) {
        throw ConfigError(fmt::format("user-side sum-k-min needs k <= m = {}", w_.users()));
      }
    }
    build_rows();
    if_star_ = solve_if_star();
  }

  const UtilityMatrix& matrix() const { return w_; }
  const TypeReduction& reduction() const { return red_; }
  ItemUtilityModel item_model() const { return model_; }
  const FairnessMeasure& measure() const { return measure_; }
  const OptimizerOptions& options() const { return opt_; }
  const FairSolution& if_star() const { return if_star_; }
  std::size_t type_vars() const { return red_.types() * w_.items(); }

  FairSolution uf_star(double gamma) const {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
      throw ConfigError(fmt::format("gamma must lie in [0, 1], got {}", gamma));
    }
    if (measure_.kind == FairnessMeasure::Kind::NashWelfare) return uf_nash(gamma);
    return uf_linear(gamma);
  }

  // User / item fairness of an m x n policy under this problem's measure.
  double user_fairness_of(const RecommendationPolicy& p) const {
    return user_fairness(p, w_, measure_);
  }
  double item_fairness_of(const RecommendationPolicy& p) const {
    return item_fairness(p, w_, model_, measure_);
  }

 private:
  void build_rows() {
    const std::size_t K = red_.types();
    const std::size_t n = w_.items();
    const UtilityMatrix wi = apply_item_utility_model(red_.typed, model_);
    user_rows_.assign(K, LinearRow{std::vector<double>(K * n, 0.0), 0.0});
    for (std::size_t k = 0; k < K; ++k) {
      const double top = red_.typed.row_max(k);
      for (std::size_t j = 0; j < n; ++j) user_rows_[k].coeffs[k * n + j] = red_.typed(k, j) / top;
    }
    item_rows_.assign(n, LinearRow{std::vector<double>(K * n, 0.0), 0.0});
    for (std::size_t j = 0; j < n; ++j) {
      double den = 0.0;
      for (std::size_t k = 0; k < K; ++k) den += red_.counts[k] * wi(k, j);
      for (std::size_t k = 0; k < K; ++k) {
        item_rows_[j].coeffs[k * n + j] = red_.counts[k] * wi(k, j) / den;
      }
    }
  }

  LPInstance simplex_region() const {
    const std::size_t K = red_.types();
    const std::size_t n = w_.items();
    LPInstance region(K * n);
    for (std::size_t k = 0; k < K; ++k) {
      std::vector<double> a(K * n, 0.0);
      for (std::size_t j = 0; j < n; ++j) a[k * n + j] = 1.0;
      region.add(std::move(a), Relation::Equal, 1.0);
    }
    return region;
  }

  std::vector<std::vector<std::size_t>> blocks() const {
    const std::size_t n = w_.items();
    std::vector<std::vector<std::size_t>> out(red_.types());
    for (std::size_t k = 0; k < red_.types(); ++k) {
      for (std::size_t j = 0; j < n; ++j) out[k].push_back(k * n + j);
    }
    return out;
  }

  FairSolution finish(std::vector<double> point, double value, bool vertex) const {
    FairSolution s;
    s.value = value;
    s.is_vertex = vertex;
    point.resize(type_vars());
    s.raw_point = point;
    s.typed_policy =
        RecommendationPolicy::renormalized(red_.types(), w_.items(), std::move(point), true);
    s.policy = expand_policy(s.typed_policy, red_);
    return s;
  }

  static void require(const LPSolution& sol, const char* what) {
    if (!sol.optimal()) throw SolverError(fmt::format("{} LP: {}", what, to_string(sol.status)));
  }

  FairSolution solve_if_star() const {
    switch (measure_.kind) {
      case FairnessMeasure::Kind::MaxMin: {
        // Optimal item fairness equalizes every item: I_j(rho) = lambda.
        LPInstance lp = simplex_region();
        const std::size_t lambda = lp.add_vars(1, VarBounds{-kInfinity, kInfinity});
        lp.objective[lambda] = 1.0;
        for (const auto& r : item_rows_) {
          auto a = detail::padded(r.coeffs, lp.num_vars);
          a[lambda] = -1.0;
          lp.add(std::move(a), Relation::Equal, 0.0);
        }
        const auto sol = solve_lp(lp, opt_.lp);
        require(sol, "item-fair");
        return finish(sol.point, sol.value, sol.is_vertex);
      }
      case FairnessMeasure::Kind::SumKMin: {
        const auto res = sum_k_smallest_epigraph(item_rows_, static_cast<double>(measure_.k),
                                                 simplex_region(), {}, opt_.lp);
        require(res.lp, "item-fair");
        return finish(res.point, res.value, res.is_vertex);
      }
      case FairnessMeasure::Kind::NashWelfare: {
        NashProblem p;
        p.num_vars = type_vars();
        p.blocks = blocks();
        for (const auto& r : item_rows_) p.objective.push_back({1.0, r});
        const auto res = nash_concave_solve(p, opt_.nash);
        if (!res.converged()) {
          throw SolverError(fmt::format("item-fair Nash solve: {} {}", to_string(res.status),
                                        res.message));
        }
        auto s = finish(res.point, res.value, false);
        s.gap = res.gap;
        return s;
      }
    }
    throw ConfigError("unknown measure");
  }

  FairSolution uf_linear(double gamma) const {
    const std::size_t nv = type_vars();
    LPInstance region = simplex_region();
    const double target = gamma * if_star_.value - opt_.if_margin;
    if (gamma > 0.0) {
      if (measure_.kind == FairnessMeasure::Kind::MaxMin) {
        for (const auto& r : item_rows_) region.add(r.coeffs, Relation::GreaterEqual, target);
      } else {
        // Sum of the k smallest item utilities >= target, via its epigraph.
        const std::size_t n = item_rows_.size();
        const std::size_t t = region.add_vars(1, VarBounds{-kInfinity, kInfinity});
        const std::size_t s0 = region.add_vars(n);
        for (std::size_t j = 0; j < n; ++j) {
          auto a = detail::padded(item_rows_[j].coeffs, region.num_vars);
          a[t] = -1.0;
          a[s0 + j] = 1.0;
          region.add(std::move(a), Relation::GreaterEqual, 0.0);
        }
        std::vector<double> a(region.num_vars, 0.0);
        a[t] = static_cast<double>(measure_.k);
        for (std::size_t j = 0; j < n; ++j) a[s0 + j] = -1.0;
        region.add(std::move(a), Relation::GreaterEqual, target);
      }
    }
    const auto rows = detail::padded(user_rows_, region.num_vars);
    const LPInstance lifted =
        measure_.kind == FairnessMeasure::Kind::MaxMin
            ? maxmin_lift(rows, region)
            : sum_k_smallest_lift(rows, static_cast<double>(measure_.k), region, red_.counts);
    const auto sol = solve_lp(lifted, opt_.lp);
    require(sol, "user-fair");
    if (opt_.tie_break == TieBreak::CanonicalSymmetric) {
      return finish(detail::leximin_point(lifted, sol.value, nv, opt_.lp), sol.value, false);
    }
    return finish(sol.point, sol.value, sol.is_vertex);
  }

  FairSolution uf_nash(double gamma) const {
    NashProblem p;
    p.num_vars = type_vars();
    p.blocks = blocks();
    for (std::size_t k = 0; k < user_rows_.size(); ++k) {
      p.objective.push_back({red_.counts[k], user_rows_[k]});
    }
    std::optional<std::vector<double>> start;
    const auto& anchor = if_star_.typed_policy.values();
    if (gamma > 0.0) {
      LogConstraint lc;
      for (const auto& r : item_rows_) lc.terms.push_back({1.0, r});
      // At gamma = 1 the margin alone keeps the anchor strictly inside, so
      // guard against renormalization moving it onto the bound.
      lc.bound = std::min(if_star_.value / gamma, log_sum(lc.terms, anchor)) - opt_.log_margin;
      p.log_constraint = std::move(lc);
      start = anchor;
    }
    const auto res = nash_concave_solve(p, opt_.nash, start);
    if (!res.converged()) {
      throw SolverError(
          fmt::format("user-fair Nash solve: {} {}", to_string(res.status), res.message));
    }
    auto s = finish(res.point, res.value, false);
    s.gap = res.gap;
    return s;
  }

  UtilityMatrix w_;
  ItemUtilityModel model_;
  FairnessMeasure measure_;
  OptimizerOptions opt_;
  TypeReduction red_;
  std::vector<LinearRow> user_rows_;
  std::vector<LinearRow> item_rows_;
  FairSolution if_star_;
};

inline FairSolution compute_if_star(const UtilityMatrix& w, ItemUtilityModel model,
                                    FairnessMeasure measure, OptimizerOptions opt = {}) {
  return FairProblem(w, model, measure, opt).if_star();
}

inline FairSolution compute_uf_star(const UtilityMatrix& w, double gamma, ItemUtilityModel model,
                                    FairnessMeasure measure, OptimizerOptions opt = {}) {
  return FairProblem(w, model, measure, opt).uf_star(gamma);
}

struct CurveRow {
  double gamma = 0.0;
  double if_star = 0.0;
  double if_target = 0.0;  // gamma IF*; for Nash the log bound IF*/gamma
  double uf_achieved = 0.0;
  double if_achieved = 0.0;
  std::string status = "optimal";
  double solve_ms = 0.0;
  RecommendationPolicy policy;
};

struct TradeoffCurve {
  std::vector<CurveRow> rows;
  FairnessMeasure measure;
  ItemUtilityModel item_model;
  TieBreak tie_break = TieBreak::SolverDefault;
  LPTolerances tolerances;

  bool all_optimal() const {
    return std::all_of(rows.begin(), rows.end(),
                       [](const CurveRow& r) { return r.status == "optimal"; });
  }
};

inline double if_target_for(const FairProblem& prob, double gamma) {
  const double ifs = prob.if_star().value;
  if (prob.measure().kind != FairnessMeasure::Kind::NashWelfare) return gamma * ifs;
  if (gamma <= 0.0) return -std::numeric_limits<double>::infinity();
  return ifs / gamma;
}

inline CurveRow solve_curve_row(const FairProblem& prob, double gamma) {
  CurveRow row;
  row.gamma = gamma;
  row.if_star = prob.if_star().value;
  row.if_target = if_target_for(prob, gamma);
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto sol = prob.uf_star(gamma);
    row.policy = sol.policy;
    row.uf_achieved = prob.user_fairness_of(sol.policy);
    row.if_achieved = prob.item_fairness_of(sol.policy);
  } catch (const SolverError& e) {
    row.status = fmt::format("solver_error: {}", e.what());
    row.uf_achieved = std::numeric_limits<double>::quiet_NaN();
    row.if_achieved = std::numeric_limits<double>::quiet_NaN();
  }
  row.solve_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

inline TradeoffCurve tradeoff_sweep(const FairProblem& prob, std::span<const double> gammas,
                                    bool parallel = false) {
  for (std::size_t i = 0; i < gammas.size(); ++i) {
    if (!(gammas[i] >= 0.0 && gammas[i] <= 1.0)) {
      throw ConfigError(fmt::format("gamma must lie in [0, 1], got {}", gammas[i]));
    }
    if (i > 0 && !(gammas[i] > gammas[i - 1])) {
      throw ConfigError("gamma grid must be strictly increasing");
    }
  }
  TradeoffCurve curve;
  curve.measure = prob.measure();
  curve.item_model = prob.item_model();
  curve.tie_break = prob.options().tie_break;
  curve.tolerances = prob.options().lp;
  if (parallel) {
    std::vector<std::future<CurveRow>> jobs;
    for (double g : gammas) {
      jobs.push_back(std::async(std::launch::async, [&prob, g] { return solve_curve_row(prob, g); }));
    }
    for (auto& j : jobs) curve.rows.push_back(j.get());
  } else {
    for (double g : gammas) curve.rows.push_back(solve_curve_row(prob, g));
  }
  return curve;
}

inline TradeoffCurve tradeoff_sweep(const UtilityMatrix& w, std::span<const double> gammas,
                                    ItemUtilityModel model, FairnessMeasure measure,
                                    OptimizerOptions opt = {}, bool parallel = false) {
  return tradeoff_sweep(FairProblem(w, model, measure, opt), gammas, parallel);
}

namespace detail {

inline void require_ratio_measure(const FairnessMeasure& m) {
  if (m.kind == FairnessMeasure::Kind::NashWelfare) {
    throw ConfigError(
        "fairness prices are ratios of user fairness and are undefined for Nash welfare "
        "(its unconstrained optimum is 0)");
  }
}

}  // namespace detail

inline double price_of_fairness(const FairProblem& prob) {
  detail::require_ratio_measure(prob.measure());
  const double uf0 = prob.uf_star(0.0).value;
  const double uf1 = prob.uf_star(1.0).value;
  return (uf0 - uf1) / uf0;
}

inline double price_of_fairness(const UtilityMatrix& w, ItemUtilityModel model,
                                FairnessMeasure measure, OptimizerOptions opt = {}) {
  detail::require_ratio_measure(measure);
  return price_of_fairness(FairProblem(w, model, measure, opt));
}

enum class PriceScope { AllUsers, MisestimatedGroup };

inline std::string to_string(PriceScope s) {
  return s == PriceScope::AllUsers ? "all" : "misest-group";
}

// Users whose true and estimated rows differ.
inline std::vector<std::size_t> misestimated_users(const UtilityMatrix& w,
                                                   const UtilityMatrix& w_hat) {
  if (w.users() != w_hat.users() || w.items() != w_hat.items()) {
    throw ConfigError("true and estimated matrices differ in shape");
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < w.users(); ++i) {
    const auto a = w.row(i);
    const auto b = w_hat.row(i);
    if (!std::equal(a.begin(), a.end(), b.begin())) out.push_back(i);
  }
  return out;
}

inline double group_user_fairness(const RecommendationPolicy& p, const UtilityMatrix& w,
                                  const FairnessMeasure& measure,
                                  std::span<const std::size_t> group) {
  std::vector<double> u;
  u.reserve(group.size());
  for (std::size_t i : group) u.push_back(normalized_user_utility(p, w, i));
  return aggregate_fairness(u, measure);
}

struct MisestimationOutcome {
  double pom = 0.0;
  double baseline = 0.0;  // true-problem fairness the estimate is compared against
  double achieved = 0.0;  // true fairness of the policy optimized on the estimate
  RecommendationPolicy estimated_policy;
};

// Both problems must share item model, measure and options.
inline MisestimationOutcome price_of_misestimation(const FairProblem& truth,
                                                   const FairProblem& estimate, double gamma,
                                                   PriceScope scope) {
  detail::require_ratio_measure(truth.measure());
  const auto group = misestimated_users(truth.matrix(), estimate.matrix());
  MisestimationOutcome out;
  const auto est = estimate.uf_star(gamma);
  out.estimated_policy = est.policy;
  if (scope == PriceScope::AllUsers) {
    out.baseline = truth.uf_star(gamma).value;
    out.achieved = user_fairness(est.policy, truth.matrix(), truth.measure());
  } else {
    if (group.empty()) {
      out.pom = 0.0;
      return out;
    }
    if (truth.measure().kind == FairnessMeasure::Kind::SumKMin && truth.measure().k > group.size()) {
      throw ConfigError("sum-k-min k exceeds the misestimated group size");
    }
    // Baseline: the same group under the true-problem optimum.
    const auto opt = truth.uf_star(gamma);
    out.baseline = group_user_fairness(opt.policy, truth.matrix(), truth.measure(), group);
    out.achieved = group_user_fairness(est.policy, truth.matrix(), truth.measure(), group);
  }
  out.pom = (out.baseline - out.achieved) / out.baseline;
  return out;
}

inline MisestimationOutcome price_of_misestimation(const UtilityMatrix& w,
                                                   const UtilityMatrix& w_hat, double gamma,
                                                   ItemUtilityModel model, FairnessMeasure measure,
                                                   PriceScope scope, OptimizerOptions opt = {}) {
  detail::require_ratio_measure(measure);
  return price_of_misestimation(FairProblem(w, model, measure, opt),
                                FairProblem(w_hat, model, measure, opt), gamma, scope);
}

struct FairnessPrices {
  double pof = 0.0;
  std::map<double, double> pom_by_gamma;
  PriceScope scope = PriceScope::AllUsers;
};

inline FairnessPrices fairness_prices(const UtilityMatrix& w, const UtilityMatrix& w_hat,
                                      std::span<const double> gammas, ItemUtilityModel model,
                                      FairnessMeasure measure, PriceScope scope,
                                      OptimizerOptions opt = {}) {
  detail::require_ratio_measure(measure);
  const FairProblem truth(w, model, measure, opt);
  const FairProblem estimate(w_hat, model, measure, opt);
  FairnessPrices out;
  out.scope = scope;
  out.pof = price_of_fairness(truth);
  for (double g : gammas) out.pom_by_gamma[g] = price_of_misestimation(truth, estimate, g, scope).pom;
  return out;
}

}  // namespace fairrec
