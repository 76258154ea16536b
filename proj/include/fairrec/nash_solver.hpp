#pragma once

// Maximizes a weighted sum of logs of affine functions over a product of
// probability simplices, optionally intersected with linear constraints and
// one "sum of logs >= bound" constraint.
//
// Method: primal log-barrier with equality-constrained Newton centering.
// The certificate is max(barrier gap M/t, Frank-Wolfe gap); the latter is
// computed with the LP engine whenever the region is polyhedral.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "fairrec/errors.hpp"
#include "fairrec/lp_engine.hpp"

namespace fairrec {

struct LogTerm {
  double weight = 1.0;
  LinearRow row;
};

struct LogConstraint {
  std::vector<LogTerm> terms;
  double bound = 0.0;  // sum_l weight_l log(row_l(x)) >= bound
};

struct NashProblem {
  std::size_t num_vars = 0;
  std::vector<std::vector<std::size_t>> blocks;  // each block sums to 1; every var in one block
  std::vector<LogTerm> objective;                // maximize sum weight log(row(x))
  std::vector<LinearConstraint> constraints;
  std::optional<LogConstraint> log_constraint;

  void validate() const {
    std::vector<int> seen(num_vars, 0);
    for (const auto& b : blocks) {
      if (b.empty()) throw ConfigError("empty simplex block");
      for (std::size_t i : b) {
        if (i >= num_vars) throw ConfigError("simplex block index out of range");
        ++seen[i];
      }
    }
    for (std::size_t i = 0; i < num_vars; ++i) {
      if (seen[i] != 1) throw ConfigError(fmt::format("variable {} must lie in exactly one block", i));
    }
    if (objective.empty()) throw ConfigError("Nash objective needs at least one term");
    auto check_row = [&](const LinearRow& r) {
      if (r.coeffs.size() != num_vars) throw ConfigError("log term has wrong length");
    };
    for (const auto& t : objective) {
      check_row(t.row);
      if (!(t.weight > 0.0)) throw ConfigError("log term weights must be positive");
    }
    for (const auto& c : constraints) {
      if (c.coeffs.size() != num_vars) throw ConfigError("constraint has wrong length");
    }
    if (log_constraint) {
      if (log_constraint->terms.empty()) throw ConfigError("log constraint needs terms");
      for (const auto& t : log_constraint->terms) {
        check_row(t.row);
        if (!(t.weight > 0.0)) throw ConfigError("log term weights must be positive");
      }
    }
  }
};

struct NashOptions {
  double gap_tolerance = 1e-6;      // required certificate
  double barrier_target = 1e-9;     // outer loop stops once M/t falls below this
  std::size_t max_iterations = 100000;
};

enum class NashStatus { Converged, IterationLimit, Infeasible, NumericalFailure };

inline std::string to_string(NashStatus s) {
  switch (s) {
    case NashStatus::Converged: return "converged";
    case NashStatus::IterationLimit: return "iteration_limit";
    case NashStatus::Infeasible: return "infeasible";
    case NashStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

struct NashResult {
  NashStatus status = NashStatus::NumericalFailure;
  double value = -std::numeric_limits<double>::infinity();
  std::vector<double> point;
  double gap = std::numeric_limits<double>::infinity();  // reported certificate
  double barrier_gap = std::numeric_limits<double>::infinity();
  std::optional<double> fw_gap;
  std::size_t iterations = 0;
  std::string message;

  bool converged() const { return status == NashStatus::Converged; }
};

inline double log_sum(std::span<const LogTerm> terms, std::span<const double> x) {
  double s = 0.0;
  for (const auto& t : terms) {
    const double u = t.row(x);
    if (!(u > 0.0)) return -std::numeric_limits<double>::infinity();
    s += t.weight * std::log(u);
  }
  return s;
}

namespace detail {

struct AffineGe {  // g . x - h >= 0
  std::vector<double> g;
  double h = 0.0;
  double slack(std::span<const double> x) const {
    double s = -h;
    for (std::size_t j = 0; j < g.size(); ++j) s += g[j] * x[j];
    return s;
  }
};

struct EqRow {
  std::vector<double> a;
  double b = 0.0;
};

inline LPInstance nash_region_lp(const NashProblem& p, const std::vector<EqRow>& eqs,
                                 const std::vector<AffineGe>& ineqs) {
  LPInstance lp(p.num_vars);
  for (const auto& e : eqs) lp.add(e.a, Relation::Equal, e.b);
  for (const auto& r : ineqs) lp.add(r.g, Relation::GreaterEqual, r.h);
  return lp;
}

class Barrier {
 public:
  Barrier(const NashProblem& p, std::vector<std::size_t> free, std::vector<AffineGe> ineqs,
          Eigen::MatrixXd A, Eigen::VectorXd b)
      : p_(p), free_(std::move(free)), ineqs_(std::move(ineqs)), A_(std::move(A)),
        b_(std::move(b)) {}

  std::size_t barrier_terms() const {
    return free_.size() + ineqs_.size() + (p_.log_constraint ? 1 : 0);
  }

  std::vector<double> full(const Eigen::VectorXd& z) const {
    std::vector<double> x(p_.num_vars, 0.0);
    for (std::size_t k = 0; k < free_.size(); ++k) x[free_[k]] = z[static_cast<Eigen::Index>(k)];
    return x;
  }

  bool strictly_feasible(const Eigen::VectorXd& z) const {
    for (Eigen::Index k = 0; k < z.size(); ++k) {
      if (!(z[k] > 0.0)) return false;
    }
    const auto x = full(z);
    for (const auto& r : ineqs_) {
      if (!(r.slack(x) > 0.0)) return false;
    }
    if (!std::isfinite(log_sum(p_.objective, x))) return false;
    if (p_.log_constraint && !(log_sum(p_.log_constraint->terms, x) > p_.log_constraint->bound)) {
      return false;
    }
    return true;
  }

  double phi(const Eigen::VectorXd& z, double t) const {
    const auto x = full(z);
    double v = -t * log_sum(p_.objective, x);
    for (Eigen::Index k = 0; k < z.size(); ++k) v -= std::log(z[k]);
    for (const auto& r : ineqs_) v -= std::log(r.slack(x));
    if (p_.log_constraint) {
      v -= std::log(log_sum(p_.log_constraint->terms, x) - p_.log_constraint->bound);
    }
    return v;
  }

  // Gradient and Hessian of phi in the free coordinates.
  void derivatives(const Eigen::VectorXd& z, double t, Eigen::VectorXd& g,
                   Eigen::MatrixXd& H) const {
    const auto x = full(z);
    const Eigen::Index d = z.size();
    g.setZero(d);
    H.setZero(d, d);
    auto restrict = [&](const std::vector<double>& c) {
      Eigen::VectorXd r(d);
      for (Eigen::Index k = 0; k < d; ++k) r[k] = c[free_[static_cast<std::size_t>(k)]];
      return r;
    };
    for (const auto& term : p_.objective) {
      const Eigen::VectorXd a = restrict(term.row.coeffs);
      const double u = term.row(x);
      g -= (t * term.weight / u) * a;
      H.noalias() += (t * term.weight / (u * u)) * a * a.transpose();
    }
    for (Eigen::Index k = 0; k < d; ++k) {
      g[k] -= 1.0 / z[k];
      H(k, k) += 1.0 / (z[k] * z[k]);
    }
    for (const auto& r : ineqs_) {
      const Eigen::VectorXd a = restrict(r.g);
      const double s = r.slack(x);
      g -= a / s;
      H.noalias() += a * a.transpose() / (s * s);
    }
    if (p_.log_constraint) {
      const auto& lc = *p_.log_constraint;
      const double psi = log_sum(lc.terms, x) - lc.bound;
      Eigen::VectorXd dpsi = Eigen::VectorXd::Zero(d);
      for (const auto& term : lc.terms) {
        const Eigen::VectorXd e = restrict(term.row.coeffs);
        const double u = term.row(x);
        dpsi += (term.weight / u) * e;
        H.noalias() += (term.weight / (u * u * psi)) * e * e.transpose();
      }
      g -= dpsi / psi;
      H.noalias() += dpsi * dpsi.transpose() / (psi * psi);
    }
  }

  // Moves z back onto A z = b along D^2 A^T, which barely touches small
  // coordinates. Skipped if it would leave the interior.
  void restore_equalities(Eigen::VectorXd& z) const {
    if (A_.rows() == 0) return;
    for (int pass = 0; pass < 3; ++pass) {
      const Eigen::VectorXd r = A_ * z - b_;
      if (r.lpNorm<Eigen::Infinity>() <= 1e-15) return;
      const Eigen::MatrixXd AD2 = A_ * z.cwiseAbs2().asDiagonal();
      const Eigen::VectorXd y = (AD2 * A_.transpose()).colPivHouseholderQr().solve(r);
      const Eigen::VectorXd next = z - AD2.transpose() * y;
      if (!next.allFinite() || !strictly_feasible(next)) return;
      z = next;
    }
  }

  double residual(const Eigen::VectorXd& z) const {
    return A_.rows() == 0 ? 0.0 : (A_ * z - b_).lpNorm<Eigen::Infinity>();
  }

  // One centering run. Returns false on numerical trouble.
  bool center(Eigen::VectorXd& z, double t, std::size_t& iterations, std::size_t cap) const {
    Eigen::VectorXd g;
    Eigen::MatrixXd H;
    for (int step = 0; step < 200; ++step) {
      if (iterations >= cap) return true;
      ++iterations;
      restore_equalities(z);
      derivatives(z, t, g, H);
      // Affine scaling by diag(z) keeps the system well conditioned near the boundary.
      const Eigen::VectorXd D = z;
      const Eigen::Index d = z.size();
      const Eigen::Index p = A_.rows();
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(d + p, d + p);
      K.topLeftCorner(d, d) = D.asDiagonal() * H * D.asDiagonal();
      Eigen::VectorXd rhs(d + p);
      rhs.head(d) = -(D.asDiagonal() * g);
      if (p > 0) {
        const Eigen::MatrixXd As = A_ * D.asDiagonal();
        K.topRightCorner(d, p) = As.transpose();
        K.bottomLeftCorner(p, d) = As;
        rhs.tail(p) = -(A_ * z - b_);
      }
      // The constraint block pivots are tiny relative to t H; the default rank
      // threshold would discard them.
      Eigen::FullPivLU<Eigen::MatrixXd> lu(K.rows(), K.cols());
      lu.setThreshold(std::numeric_limits<double>::min());
      lu.compute(K);
      Eigen::VectorXd sol = lu.solve(rhs);
      sol += lu.solve(rhs - K * sol);  // one refinement step
      const Eigen::VectorXd dz = sol.head(d);
      if (!dz.allFinite()) return false;
      const double decrement = dz.dot(K.topLeftCorner(d, d) * dz);
      if (decrement / 2.0 <= 1e-11 && residual(z) <= 1e-13) return true;
      const Eigen::VectorXd dx = D.asDiagonal() * dz;

      double s = 1.0;
      while (!strictly_feasible(z + s * dx)) {
        s *= 0.5;
        if (s < 1e-20) return true;
      }
      const double f0 = phi(z, t);
      const double slope = g.dot(dx);
      while (phi(z + s * dx, t) > f0 + 0.1 * s * std::min(slope, 0.0)) {
        s *= 0.5;
        if (s < 1e-20) return true;
      }
      z += s * dx;
    }
    return true;
  }

 private:
  const NashProblem& p_;
  std::vector<std::size_t> free_;
  std::vector<AffineGe> ineqs_;
  Eigen::MatrixXd A_;
  Eigen::VectorXd b_;
};

inline std::optional<double> frank_wolfe_gap(const NashProblem& p, std::span<const double> x) {
  if (p.log_constraint) return std::nullopt;
  LPInstance lp(p.num_vars);
  for (const auto& blk : p.blocks) {
    std::vector<double> a(p.num_vars, 0.0);
    for (std::size_t i : blk) a[i] = 1.0;
    lp.add(std::move(a), Relation::Equal, 1.0);
  }
  for (const auto& c : p.constraints) lp.constraints.push_back(c);
  std::vector<double> grad(p.num_vars, 0.0);
  for (const auto& term : p.objective) {
    const double u = term.row(x);
    for (std::size_t j = 0; j < p.num_vars; ++j) grad[j] += term.weight * term.row.coeffs[j] / u;
  }
  lp.objective = grad;
  const auto sol = solve_lp(lp);
  if (!sol.optimal()) return std::nullopt;
  double at = 0.0;
  for (std::size_t j = 0; j < p.num_vars; ++j) at += grad[j] * x[j];
  return std::max(0.0, sol.value - at);
}

}  // namespace detail

inline NashResult nash_concave_solve(const NashProblem& p, const NashOptions& opt = {},
                                     std::optional<std::vector<double>> start = std::nullopt) {
  p.validate();
  NashResult res;

  std::vector<detail::EqRow> eqs;
  std::vector<detail::AffineGe> ineqs;
  for (const auto& blk : p.blocks) {
    detail::EqRow e{std::vector<double>(p.num_vars, 0.0), 1.0};
    for (std::size_t i : blk) e.a[i] = 1.0;
    eqs.push_back(std::move(e));
  }
  for (const auto& c : p.constraints) {
    switch (c.relation) {
      case Relation::Equal: eqs.push_back({c.coeffs, c.rhs}); break;
      case Relation::GreaterEqual: ineqs.push_back({c.coeffs, c.rhs}); break;
      case Relation::LessEqual: {
        detail::AffineGe r{c.coeffs, -c.rhs};
        for (double& v : r.g) v = -v;
        ineqs.push_back(std::move(r));
        break;
      }
    }
  }

  std::vector<bool> fixed_zero(p.num_vars, false);
  std::vector<double> x0;
  if (start) {
    x0 = *start;
    if (x0.size() != p.num_vars) throw ConfigError("start point has wrong length");
  } else if (p.log_constraint) {
    throw ConfigError("a log constraint needs an explicit strictly feasible start");
  } else if (ineqs.empty() && eqs.size() == p.blocks.size()) {
    x0.assign(p.num_vars, 0.0);
    for (const auto& blk : p.blocks) {
      for (std::size_t i : blk) x0[i] = 1.0 / static_cast<double>(blk.size());
    }
  } else {
    // Find implicit equalities and variables forced to zero, then start at
    // the average of the LP points visited, which is relatively interior.
    std::vector<std::vector<double>> pts;
    LPInstance base = detail::nash_region_lp(p, eqs, ineqs);
    std::vector<detail::AffineGe> kept;
    for (const auto& r : ineqs) {
      LPInstance lp = base;
      lp.objective = r.g;
      const auto sol = solve_lp(lp);
      if (sol.status == LPStatus::Infeasible) {
        res.status = NashStatus::Infeasible;
        res.message = "constraint region is empty";
        return res;
      }
      if (!sol.optimal()) {
        res.message = "region preprocessing LP failed: " + to_string(sol.status);
        return res;
      }
      pts.push_back(sol.point);
      if (sol.value - r.h <= 1e-9 * (1.0 + std::abs(r.h))) {
        eqs.push_back({r.g, r.h});
      } else {
        kept.push_back(r);
      }
    }
    ineqs = std::move(kept);
    base = detail::nash_region_lp(p, eqs, ineqs);
    for (std::size_t i = 0; i < p.num_vars; ++i) {
      bool positive = false;
      for (const auto& q : pts) positive = positive || q[i] > 1e-9;
      if (positive) continue;
      LPInstance lp = base;
      lp.objective.assign(p.num_vars, 0.0);
      lp.objective[i] = 1.0;
      const auto sol = solve_lp(lp);
      if (sol.status == LPStatus::Infeasible) {
        res.status = NashStatus::Infeasible;
        res.message = "constraint region is empty";
        return res;
      }
      if (!sol.optimal()) {
        res.message = "region preprocessing LP failed: " + to_string(sol.status);
        return res;
      }
      if (sol.value <= 1e-10) {
        fixed_zero[i] = true;
      } else {
        pts.push_back(sol.point);
      }
    }
    if (pts.empty()) {
      LPInstance lp = base;
      const auto sol = solve_lp(lp);
      if (!sol.optimal()) {
        res.status = sol.status == LPStatus::Infeasible ? NashStatus::Infeasible
                                                        : NashStatus::NumericalFailure;
        res.message = "constraint region is empty";
        return res;
      }
      pts.push_back(sol.point);
    }
    x0.assign(p.num_vars, 0.0);
    for (const auto& q : pts) {
      for (std::size_t i = 0; i < p.num_vars; ++i) x0[i] += q[i] / static_cast<double>(pts.size());
    }
    for (std::size_t i = 0; i < p.num_vars; ++i) {
      if (fixed_zero[i]) x0[i] = 0.0;
    }
  }

  std::vector<std::size_t> free;
  for (std::size_t i = 0; i < p.num_vars; ++i) {
    if (!fixed_zero[i]) free.push_back(i);
  }
  const auto d = static_cast<Eigen::Index>(free.size());
  Eigen::VectorXd z(d);
  for (Eigen::Index k = 0; k < d; ++k) z[k] = x0[free[static_cast<std::size_t>(k)]];

  // Independent subset of the equality rows.
  Eigen::MatrixXd Afull(static_cast<Eigen::Index>(eqs.size()), d);
  Eigen::VectorXd bfull(static_cast<Eigen::Index>(eqs.size()));
  for (std::size_t r = 0; r < eqs.size(); ++r) {
    for (Eigen::Index k = 0; k < d; ++k) {
      Afull(static_cast<Eigen::Index>(r), k) = eqs[r].a[free[static_cast<std::size_t>(k)]];
    }
    bfull[static_cast<Eigen::Index>(r)] = eqs[r].b;
  }
  Eigen::MatrixXd A(0, d);
  Eigen::VectorXd b(0);
  if (Afull.rows() > 0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(Afull.transpose());
    qr.setThreshold(1e-10);
    const Eigen::Index rank = qr.rank();
    A.resize(rank, d);
    b.resize(rank);
    for (Eigen::Index r = 0; r < rank; ++r) {
      const Eigen::Index src = qr.colsPermutation().indices()[r];
      A.row(r) = Afull.row(src);
      b[r] = bfull[src];
    }
  }

  detail::Barrier barrier(p, free, ineqs, A, b);
  if (!barrier.strictly_feasible(z)) {
    const auto x = barrier.full(z);
    if (!std::isfinite(log_sum(p.objective, x)) && !start) {
      res.status = NashStatus::Infeasible;
      res.message = "Nash objective is unbounded below on the region";
      return res;
    }
    throw ConfigError("start point is not strictly feasible");
  }
  if (A.rows() > 0 && (A * z - b).cwiseAbs().maxCoeff() > 1e-6) {
    throw ConfigError("start point violates the equality constraints");
  }

  const double M = static_cast<double>(barrier.barrier_terms());
  double t = 1.0;
  bool ok = true;
  while (true) {
    ok = barrier.center(z, t, res.iterations, opt.max_iterations);
    if (!ok || res.iterations >= opt.max_iterations) break;
    if (M / t < opt.barrier_target) break;
    t *= 10.0;
  }

  barrier.restore_equalities(z);
  res.point = barrier.full(z);
  res.value = log_sum(p.objective, res.point);
  res.barrier_gap = M / t;
  res.fw_gap = detail::frank_wolfe_gap(p, res.point);
  res.gap = std::max(res.barrier_gap, res.fw_gap.value_or(0.0));
  if (!ok) {
    res.status = NashStatus::NumericalFailure;
    res.message = "Newton system could not be solved";
  } else if (res.gap <= opt.gap_tolerance) {
    res.status = NashStatus::Converged;
  } else if (res.iterations >= opt.max_iterations) {
    res.status = NashStatus::IterationLimit;
    res.message = fmt::format("iteration cap {} reached with gap {:.3g}", opt.max_iterations,
                              res.gap);
  } else {
    res.status = NashStatus::NumericalFailure;
    res.message = fmt::format("stalled with gap {:.3g}", res.gap);
  }
  return res;
}

}  // namespace fairrec
