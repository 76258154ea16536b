#pragma once

// Dense two-phase primal simplex and the epigraph lifts that turn max-min
// and sum-of-k-smallest objectives over linear functionals into LPs.
//
// The engine always stops at a basic feasible solution, so `is_vertex` is
// true on every Optimal result. Pivoting is deterministic: Dantzig pricing
// with a switch to Bland's rule after a run of degenerate pivots.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "fairrec/errors.hpp"

namespace fairrec {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Relation { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
  std::vector<double> coeffs;
  Relation relation = Relation::LessEqual;
  double rhs = 0.0;
};

struct VarBounds {
  double lower = 0.0;
  double upper = kInfinity;
};

// max objective . x  subject to constraints and per-variable bounds.
struct LPInstance {
  std::size_t num_vars = 0;
  std::vector<double> objective;
  std::vector<LinearConstraint> constraints;
  std::vector<VarBounds> bounds;  // empty: every variable in [0, inf)

  explicit LPInstance(std::size_t vars = 0)
      : num_vars(vars), objective(vars, 0.0), bounds(vars) {}

  void add(std::vector<double> coeffs, Relation rel, double rhs) {
    constraints.push_back({std::move(coeffs), rel, rhs});
  }

  // Appends `extra` variables (bounds [0, inf), zero objective) and pads
  // every existing constraint. Returns the index of the first new variable.
  std::size_t add_vars(std::size_t extra, VarBounds b = {}) {
    const std::size_t first = num_vars;
    num_vars += extra;
    objective.resize(num_vars, 0.0);
    if (bounds.empty()) bounds.assign(first, VarBounds{});
    bounds.resize(num_vars, b);
    for (auto& c : constraints) c.coeffs.resize(num_vars, 0.0);
    return first;
  }

  VarBounds bound(std::size_t j) const { return bounds.empty() ? VarBounds{} : bounds[j]; }

  void validate() const {
    if (objective.size() != num_vars) throw ConfigError("objective length != num_vars");
    if (!bounds.empty() && bounds.size() != num_vars) {
      throw ConfigError("bounds length != num_vars");
    }
    for (std::size_t r = 0; r < constraints.size(); ++r) {
      if (constraints[r].coeffs.size() != num_vars) {
        throw ConfigError(fmt::format("constraint {} has {} coefficients, expected {}", r,
                                      constraints[r].coeffs.size(), num_vars));
      }
      if (!std::isfinite(constraints[r].rhs)) {
        throw ConfigError(fmt::format("constraint {} has a non-finite bound", r));
      }
    }
    for (std::size_t j = 0; j < num_vars; ++j) {
      const VarBounds b = bound(j);
      if (std::isnan(b.lower) || std::isnan(b.upper) || b.lower == kInfinity ||
          b.upper == -kInfinity || b.lower > b.upper) {
        throw ConfigError(fmt::format("variable {} has invalid bounds [{}, {}]", j, b.lower,
                                      b.upper));
      }
    }
  }
};

enum class LPStatus { Optimal, Infeasible, Unbounded, NumericalFailure, IterationLimit };

inline std::string to_string(LPStatus s) {
  switch (s) {
    case LPStatus::Optimal: return "optimal";
    case LPStatus::Infeasible: return "infeasible";
    case LPStatus::Unbounded: return "unbounded";
    case LPStatus::NumericalFailure: return "numerical_failure";
    case LPStatus::IterationLimit: return "iteration_limit";
  }
  return "unknown";
}

struct LPTolerances {
  double feasibility = 1e-7;
  double optimality = 1e-7;
  double pivot = 1e-9;
};

struct LPSolution {
  LPStatus status = LPStatus::NumericalFailure;
  std::vector<double> point;
  double value = 0.0;
  bool is_vertex = false;
  std::size_t iterations = 0;
  double max_violation = 0.0;

  bool optimal() const { return status == LPStatus::Optimal; }
};

namespace detail {

// How an original variable maps onto nonnegative standard-form columns.
struct VarMap {
  enum class Kind { Shifted, Mirrored, Split } kind = Kind::Shifted;
  std::size_t col = 0;   // x' (or x+ for Split)
  std::size_t col2 = 0;  // x- for Split
  double offset = 0.0;   // lower (Shifted) or upper (Mirrored)
};

class Simplex {
 public:
  Simplex(const LPInstance& lp, const LPTolerances& tol) : lp_(lp), tol_(tol) { build(); }

  LPSolution run() {
    LPSolution sol;
    const std::size_t limit = 20000 + 50 * (rows_ + cols_);

    // Phase I: maximize -sum(artificials).
    std::vector<double> phase1(cols_, 0.0);
    for (std::size_t c = first_art_; c < cols_; ++c) phase1[c] = -1.0;
    auto st = optimize(phase1, limit);
    sol.iterations = iterations_;
    if (st != LPStatus::Optimal) {
      sol.status = st == LPStatus::Unbounded ? LPStatus::NumericalFailure : st;
      return sol;
    }
    double infeas = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (basis_[r] >= first_art_) infeas += rhs(r);
    }
    if (infeas > 1e-9 * (1.0 + rhs_scale_)) {
      sol.status = LPStatus::Infeasible;
      return sol;
    }
    purge_artificials();

    std::vector<double> phase2(cols_, 0.0);
    for (std::size_t c = 0; c < first_art_; ++c) phase2[c] = std_obj_[c];
    st = optimize(phase2, limit);
    sol.iterations = iterations_;
    if (st != LPStatus::Optimal) {
      sol.status = st;
      return sol;
    }
    return extract();
  }

 private:
  double& at(std::size_t r, std::size_t c) { return tab_[r * width_ + c]; }
  double at(std::size_t r, std::size_t c) const { return tab_[r * width_ + c]; }
  double rhs(std::size_t r) const { return at(r, cols_); }

  void build() {
    const std::size_t nv = lp_.num_vars;
    maps_.resize(nv);
    std::size_t ncol = 0;
    for (std::size_t j = 0; j < nv; ++j) {
      const VarBounds b = lp_.bound(j);
      VarMap& vm = maps_[j];
      if (std::isfinite(b.lower)) {
        vm.kind = VarMap::Kind::Shifted;
        vm.offset = b.lower;
        vm.col = ncol++;
      } else if (std::isfinite(b.upper)) {
        vm.kind = VarMap::Kind::Mirrored;
        vm.offset = b.upper;
        vm.col = ncol++;
      } else {
        vm.kind = VarMap::Kind::Split;
        vm.col = ncol++;
        vm.col2 = ncol++;
      }
    }
    const std::size_t nstruct = ncol;

    // Structural rows: (coeffs over standard columns, relation, rhs).
    struct Row {
      std::vector<double> a;
      Relation rel;
      double b;
    };
    std::vector<Row> rows;
    for (const auto& c : lp_.constraints) {
      Row row{std::vector<double>(nstruct, 0.0), c.relation, c.rhs};
      for (std::size_t j = 0; j < nv; ++j) {
        const double a = c.coeffs[j];
        if (a == 0.0) continue;
        const VarMap& vm = maps_[j];
        switch (vm.kind) {
          case VarMap::Kind::Shifted:
            row.a[vm.col] += a;
            row.b -= a * vm.offset;
            break;
          case VarMap::Kind::Mirrored:
            row.a[vm.col] -= a;
            row.b -= a * vm.offset;
            break;
          case VarMap::Kind::Split:
            row.a[vm.col] += a;
            row.a[vm.col2] -= a;
            break;
        }
      }
      rows.push_back(std::move(row));
    }
    for (std::size_t j = 0; j < nv; ++j) {
      const VarBounds b = lp_.bound(j);
      if (maps_[j].kind == VarMap::Kind::Shifted && std::isfinite(b.upper)) {
        Row row{std::vector<double>(nstruct, 0.0), Relation::LessEqual, b.upper - b.lower};
        row.a[maps_[j].col] = 1.0;
        rows.push_back(std::move(row));
      }
    }

    rows_ = rows.size();
    std::size_t nslack = 0;
    for (const auto& r : rows) nslack += r.rel == Relation::Equal ? 0 : 1;

    // Decide which rows need an artificial variable.
    std::vector<double> slack_sign(rows_, 0.0);
    std::vector<bool> flip(rows_, false);
    std::size_t nart = 0;
    for (std::size_t r = 0; r < rows_; ++r) {
      double s = rows[r].rel == Relation::LessEqual ? 1.0
                 : rows[r].rel == Relation::GreaterEqual ? -1.0
                                                        : 0.0;
      if (rows[r].b < 0.0) {
        flip[r] = true;
        s = -s;
      }
      slack_sign[r] = s;
      if (s != 1.0) ++nart;
    }

    first_slack_ = nstruct;
    first_art_ = nstruct + nslack;
    cols_ = first_art_ + nart;
    width_ = cols_ + 1;
    tab_.assign(rows_ * width_, 0.0);
    basis_.assign(rows_, 0);
    std_obj_.assign(cols_, 0.0);
    for (std::size_t j = 0; j < nv; ++j) {
      const double c = lp_.objective[j];
      const VarMap& vm = maps_[j];
      switch (vm.kind) {
        case VarMap::Kind::Shifted: std_obj_[vm.col] += c; break;
        case VarMap::Kind::Mirrored: std_obj_[vm.col] -= c; break;
        case VarMap::Kind::Split:
          std_obj_[vm.col] += c;
          std_obj_[vm.col2] -= c;
          break;
      }
    }

    std::size_t slack = first_slack_;
    std::size_t art = first_art_;
    rhs_scale_ = 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double sign = flip[r] ? -1.0 : 1.0;
      for (std::size_t c = 0; c < nstruct; ++c) at(r, c) = sign * rows[r].a[c];
      at(r, cols_) = sign * rows[r].b;
      rhs_scale_ = std::max(rhs_scale_, std::abs(rows[r].b));
      if (rows[r].rel != Relation::Equal) {
        at(r, slack) = slack_sign[r];
        if (slack_sign[r] == 1.0) basis_[r] = slack;
        ++slack;
      }
      if (slack_sign[r] != 1.0) {
        at(r, art) = 1.0;
        basis_[r] = art;
        ++art;
      }
    }
    original_ = tab_;
    original_rows_.resize(rows_);
    for (std::size_t r = 0; r < rows_; ++r) original_rows_[r] = r;
  }

  void pivot(std::size_t pr, std::size_t pc) {
    const double p = at(pr, pc);
    for (std::size_t c = 0; c < width_; ++c) at(pr, c) /= p;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c < width_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
    }
    const double f = reduced_[pc];
    if (f != 0.0) {
      for (std::size_t c = 0; c < cols_; ++c) reduced_[c] -= f * at(pr, c);
      reduced_[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

  LPStatus optimize(const std::vector<double>& cost, std::size_t limit) {
    reduced_ = cost;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double cb = cost[basis_[r]];
      if (cb == 0.0) continue;
      for (std::size_t c = 0; c < cols_; ++c) reduced_[c] -= cb * at(r, c);
    }
    bool bland = false;
    std::size_t degenerate_run = 0;
    while (true) {
      if (iterations_ >= limit) return LPStatus::IterationLimit;
      std::size_t enter = cols_;
      double best = tol_.pivot;
      for (std::size_t c = 0; c < cols_; ++c) {
        if (barred(c)) continue;
        if (reduced_[c] > best) {
          enter = c;
          if (bland) break;
          best = reduced_[c];
        }
      }
      if (enter == cols_) return LPStatus::Optimal;

      std::size_t leave = rows_;
      double min_ratio = kInfinity;
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = at(r, enter);
        if (a <= tol_.pivot) continue;
        const double ratio = std::max(rhs(r), 0.0) / a;
        if (leave == rows_ || ratio < min_ratio - 1e-12) {
          leave = r;
          min_ratio = ratio;
        } else if (ratio <= min_ratio + 1e-12) {
          const bool better = bland ? basis_[r] < basis_[leave] : a > at(leave, enter);
          if (better) {
            leave = r;
            min_ratio = std::min(min_ratio, ratio);
          }
        }
      }
      if (leave == rows_) return LPStatus::Unbounded;

      degenerate_run = min_ratio <= 1e-12 ? degenerate_run + 1 : 0;
      if (degenerate_run > 50) bland = true;
      pivot(leave, enter);
      ++iterations_;
    }
  }

  bool barred(std::size_t c) const { return artificials_barred_ && c >= first_art_; }

  void purge_artificials() {
    artificials_barred_ = true;
    reduced_.assign(cols_, 0.0);
    std::size_t r = 0;
    while (r < rows_) {
      if (basis_[r] < first_art_) {
        ++r;
        continue;
      }
      std::size_t col = first_art_;
      double best = tol_.pivot;
      for (std::size_t c = 0; c < first_art_; ++c) {
        if (std::abs(at(r, c)) > best) {
          best = std::abs(at(r, c));
          col = c;
        }
      }
      if (col < first_art_) {
        pivot(r, col);
        ++r;
      } else {
        drop_row(r);
      }
    }
  }

  void drop_row(std::size_t r) {
    tab_.erase(tab_.begin() + static_cast<std::ptrdiff_t>(r * width_),
               tab_.begin() + static_cast<std::ptrdiff_t>((r + 1) * width_));
    basis_.erase(basis_.begin() + static_cast<std::ptrdiff_t>(r));
    original_rows_.erase(original_rows_.begin() + static_cast<std::ptrdiff_t>(r));
    --rows_;
  }

  // Re-solves B x_B = b from the untouched data to shed pivoting drift.
  std::vector<double> basic_values() const {
    std::vector<double> xb(rows_);
    for (std::size_t r = 0; r < rows_; ++r) xb[r] = rhs(r);
    if (rows_ == 0) return xb;
    Eigen::MatrixXd bmat(rows_, rows_);
    Eigen::VectorXd bvec(rows_);
    for (std::size_t i = 0; i < rows_; ++i) {
      const std::size_t orow = original_rows_[i];
      for (std::size_t k = 0; k < rows_; ++k) {
        bmat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
            original_[orow * width_ + basis_[k]];
      }
      bvec(static_cast<Eigen::Index>(i)) = original_[orow * width_ + cols_];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(bmat);
    if (!lu.isInvertible()) return xb;
    const Eigen::VectorXd sol = lu.solve(bvec);
    if ((bmat * sol - bvec).lpNorm<Eigen::Infinity>() > 1e-9 * (1.0 + rhs_scale_)) return xb;
    for (std::size_t r = 0; r < rows_; ++r) xb[r] = sol(static_cast<Eigen::Index>(r));
    return xb;
  }

  LPSolution extract() const {
    LPSolution sol;
    sol.iterations = iterations_;
    std::vector<double> xs(cols_, 0.0);
    const std::vector<double> xb = basic_values();
    for (std::size_t r = 0; r < rows_; ++r) {
      double v = xb[r];
      if (v < 0.0) {
        if (v < -tol_.feasibility) {
          sol.status = LPStatus::NumericalFailure;
          return sol;
        }
        v = 0.0;
      }
      xs[basis_[r]] = v;
    }
    sol.point.assign(lp_.num_vars, 0.0);
    for (std::size_t j = 0; j < lp_.num_vars; ++j) {
      const VarMap& vm = maps_[j];
      switch (vm.kind) {
        case VarMap::Kind::Shifted: sol.point[j] = vm.offset + xs[vm.col]; break;
        case VarMap::Kind::Mirrored: sol.point[j] = vm.offset - xs[vm.col]; break;
        case VarMap::Kind::Split: sol.point[j] = xs[vm.col] - xs[vm.col2]; break;
      }
    }
    double value = 0.0;
    for (std::size_t j = 0; j < lp_.num_vars; ++j) value += lp_.objective[j] * sol.point[j];
    sol.value = value;

    double worst = 0.0;
    for (const auto& c : lp_.constraints) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < lp_.num_vars; ++j) lhs += c.coeffs[j] * sol.point[j];
      const double scale = 1.0 + std::abs(c.rhs);
      double viol = 0.0;
      if (c.relation != Relation::GreaterEqual) viol = std::max(viol, lhs - c.rhs);
      if (c.relation != Relation::LessEqual) viol = std::max(viol, c.rhs - lhs);
      worst = std::max(worst, viol / scale);
    }
    for (std::size_t j = 0; j < lp_.num_vars; ++j) {
      const VarBounds b = lp_.bound(j);
      worst = std::max(worst, b.lower - sol.point[j]);
      worst = std::max(worst, sol.point[j] - b.upper);
    }
    sol.max_violation = worst;
    sol.is_vertex = true;
    sol.status = worst > tol_.feasibility ? LPStatus::NumericalFailure : LPStatus::Optimal;
    return sol;
  }

  const LPInstance& lp_;
  LPTolerances tol_;
  std::vector<VarMap> maps_;
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t width_ = 0;
  std::size_t first_slack_ = 0;
  std::size_t first_art_ = 0;
  bool artificials_barred_ = false;
  double rhs_scale_ = 0.0;
  std::vector<double> tab_;
  std::vector<double> original_;
  std::vector<std::size_t> original_rows_;
  std::vector<std::size_t> basis_;
  std::vector<double> std_obj_;
  std::vector<double> reduced_;
  std::size_t iterations_ = 0;
};

}  // namespace detail

inline LPSolution solve_lp(const LPInstance& instance, const LPTolerances& tol = {}) {
  instance.validate();
  detail::Simplex simplex(instance, tol);
  return simplex.run();
}

// An affine functional coeffs . x + constant.
struct LinearRow {
  std::vector<double> coeffs;
  double constant = 0.0;

  double operator()(std::span<const double> x) const {
    double s = constant;
    for (std::size_t j = 0; j < coeffs.size(); ++j) s += coeffs[j] * x[j];
    return s;
  }
};

struct EpigraphResult {
  LPStatus status = LPStatus::NumericalFailure;
  double value = 0.0;
  std::vector<double> point;  // original region variables only
  bool is_vertex = false;
  LPSolution lp;              // solution of the lifted LP (region vars first)
};

namespace detail {

inline void check_rows(std::span<const LinearRow> rows, const LPInstance& region) {
  if (rows.empty()) throw ConfigError("epigraph lift needs at least one row");
  for (const auto& r : rows) {
    if (r.coeffs.size() != region.num_vars) {
      throw ConfigError(fmt::format("row has {} coefficients, region has {} variables",
                                    r.coeffs.size(), region.num_vars));
    }
  }
}

inline EpigraphResult finish(LPSolution lp, std::size_t region_vars) {
  EpigraphResult out;
  out.status = lp.status;
  if (lp.optimal()) {
    out.value = lp.value;
    out.point.assign(lp.point.begin(),
                     lp.point.begin() + static_cast<std::ptrdiff_t>(region_vars));
    out.is_vertex = lp.is_vertex;
  }
  out.lp = std::move(lp);
  return out;
}

}  // namespace detail

// Lifted LP for max_x min_r row_r(x): a free variable t with row_r(x) >= t.
// The region's objective is ignored. t is the last variable.
inline LPInstance maxmin_lift(std::span<const LinearRow> rows, const LPInstance& region) {
  detail::check_rows(rows, region);
  LPInstance lp = region;
  std::fill(lp.objective.begin(), lp.objective.end(), 0.0);
  const std::size_t t = lp.add_vars(1, VarBounds{-kInfinity, kInfinity});
  lp.objective[t] = 1.0;
  for (const auto& r : rows) {
    std::vector<double> a = r.coeffs;
    a.push_back(-1.0);
    lp.add(std::move(a), Relation::GreaterEqual, -r.constant);
  }
  return lp;
}

inline EpigraphResult solve_maxmin_linear(std::span<const LinearRow> rows,
                                          const LPInstance& region,
                                          const LPTolerances& tol = {}) {
  return detail::finish(solve_lp(maxmin_lift(rows, region), tol), region.num_vars);
}

// Lifted LP for the sum of the k smallest rows (row r counted weights[r]
// times): max k t - sum_r weights_r s_r with s_r >= t - row_r(x), s_r >= 0.
// Variables: region vars, then t, then one s per row.
inline LPInstance sum_k_smallest_lift(std::span<const LinearRow> rows, double k,
                                      const LPInstance& region,
                                      std::span<const double> weights = {}) {
  detail::check_rows(rows, region);
  if (!weights.empty() && weights.size() != rows.size()) {
    throw ConfigError("sum-k-smallest weights must match rows");
  }
  double total = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) total += weights.empty() ? 1.0 : weights[r];
  if (!(k >= 1.0) || k > total + 1e-9) {
    throw ConfigError(fmt::format("sum-k-smallest needs 1 <= k <= {}, got {}", total, k));
  }
  LPInstance lp = region;
  std::fill(lp.objective.begin(), lp.objective.end(), 0.0);
  const std::size_t t = lp.add_vars(1, VarBounds{-kInfinity, kInfinity});
  const std::size_t s0 = lp.add_vars(rows.size());
  lp.objective[t] = k;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    lp.objective[s0 + r] = -(weights.empty() ? 1.0 : weights[r]);
    std::vector<double> a = rows[r].coeffs;
    a.resize(lp.num_vars, 0.0);
    a[t] = -1.0;
    a[s0 + r] = 1.0;
    lp.add(std::move(a), Relation::GreaterEqual, -rows[r].constant);
  }
  return lp;
}

inline EpigraphResult sum_k_smallest_epigraph(std::span<const LinearRow> rows, double k,
                                              const LPInstance& region,
                                              std::span<const double> weights = {},
                                              const LPTolerances& tol = {}) {
  return detail::finish(solve_lp(sum_k_smallest_lift(rows, k, region, weights), tol),
                        region.num_vars);
}

}  // namespace fairrec
