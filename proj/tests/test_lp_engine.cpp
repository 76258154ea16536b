#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fairrec/lp_engine.hpp"

using namespace fairrec;

namespace {

LPInstance box_region(std::size_t d) {
  LPInstance region(d);
  for (auto& b : region.bounds) b = {0.0, 1.0};
  return region;
}

// Concave maximization by nested grid refinement over [0,1]^d intersected
// with the region's extra constraints. Independent of the simplex code.
double grid_maxmin(const std::vector<LinearRow>& rows, const LPInstance& region) {
  const std::size_t d = region.num_vars;
  auto feasible = [&](const std::vector<double>& x) {
    for (const auto& c : region.constraints) {
      double lhs = 0.0;
      for (std::size_t j = 0; j < d; ++j) lhs += c.coeffs[j] * x[j];
      if (c.relation == Relation::LessEqual && lhs > c.rhs + 1e-12) return false;
      if (c.relation == Relation::GreaterEqual && lhs < c.rhs - 1e-12) return false;
    }
    return true;
  };
  auto eval = [&](const std::vector<double>& x) {
    double v = kInfinity;
    for (const auto& r : rows) v = std::min(v, r(x));
    return v;
  };
  std::vector<double> lo(d, 0.0), hi(d, 1.0), best_x(d, 0.0);
  double best = -kInfinity;
  const int pts = d <= 2 ? 41 : 15;
  for (int level = 0; level < 60; ++level) {
    std::vector<int> idx(d, 0);
    std::vector<double> x(d);
    while (true) {
      for (std::size_t j = 0; j < d; ++j) x[j] = lo[j] + (hi[j] - lo[j]) * idx[j] / (pts - 1);
      if (feasible(x)) {
        const double v = eval(x);
        if (v > best) {
          best = v;
          best_x = x;
        }
      }
      std::size_t j = 0;
      while (j < d && ++idx[j] == pts) idx[j++] = 0;
      if (j == d) break;
    }
    // Re-center on the best point; shrink only when it is interior to the
    // current box, so the search can walk along ridges.
    bool on_edge = false;
    for (std::size_t j = 0; j < d; ++j) {
      const double step = (hi[j] - lo[j]) / (pts - 1);
      if ((best_x[j] - lo[j] < 0.5 * step && lo[j] > 0.0) ||
          (hi[j] - best_x[j] < 0.5 * step && hi[j] < 1.0)) {
        on_edge = true;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double half = (hi[j] - lo[j]) / (on_edge ? 2.0 : 4.0);
      lo[j] = std::max(0.0, best_x[j] - half);
      hi[j] = std::min(1.0, best_x[j] + half);
    }
  }
  return best;
}

}  // namespace

TEST(SolveLp, SingleBoundedVariable) {
  LPInstance lp(1);
  lp.objective = {1.0};
  lp.add({1.0}, Relation::LessEqual, 3.0);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LPStatus::Optimal);
  EXPECT_NEAR(sol.value, 3.0, 1e-12);
  EXPECT_TRUE(sol.is_vertex);
}

TEST(SolveLp, SumOnSimplex) {
  LPInstance lp(2);
  lp.objective = {1.0, 1.0};
  lp.add({1.0, 1.0}, Relation::LessEqual, 1.0);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LPStatus::Optimal);
  EXPECT_NEAR(sol.value, 1.0, 1e-12);
}

TEST(SolveLp, DetectsInfeasibility) {
  LPInstance lp(1);
  lp.objective = {1.0};
  lp.add({1.0}, Relation::GreaterEqual, 2.0);
  lp.add({1.0}, Relation::LessEqual, 1.0);
  EXPECT_EQ(solve_lp(lp).status, LPStatus::Infeasible);
}

TEST(SolveLp, DetectsUnboundedness) {
  LPInstance lp(2);
  lp.objective = {1.0, 0.0};
  lp.add({1.0, -1.0}, Relation::LessEqual, 1.0);
  EXPECT_EQ(solve_lp(lp).status, LPStatus::Unbounded);
}

TEST(SolveLp, HandlesFreeAndUpperBoundedVariables) {
  // max -x - y  with x free, x >= -2, y <= 5 (lower -inf), y >= x + 1
  LPInstance lp(2);
  lp.objective = {-1.0, -1.0};
  lp.bounds = {{-kInfinity, kInfinity}, {-kInfinity, 5.0}};
  lp.add({1.0, 0.0}, Relation::GreaterEqual, -2.0);
  lp.add({-1.0, 1.0}, Relation::GreaterEqual, 1.0);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LPStatus::Optimal);
  EXPECT_NEAR(sol.point[0], -2.0, 1e-12);
  EXPECT_NEAR(sol.point[1], -1.0, 1e-12);
  EXPECT_NEAR(sol.value, 3.0, 1e-12);
}

TEST(SolveLp, EqualityWithRedundantRow) {
  LPInstance lp(3);
  lp.objective = {1.0, 2.0, 3.0};
  lp.add({1.0, 1.0, 1.0}, Relation::Equal, 1.0);
  lp.add({2.0, 2.0, 2.0}, Relation::Equal, 2.0);
  lp.add({0.0, 0.0, 1.0}, Relation::LessEqual, 0.25);
  const auto sol = solve_lp(lp);
  ASSERT_EQ(sol.status, LPStatus::Optimal);
  EXPECT_NEAR(sol.value, 0.75 * 2.0 + 0.25 * 3.0, 1e-12);
}

TEST(SolveLp, RejectsMalformedInstances) {
  LPInstance lp(2);
  lp.add({1.0}, Relation::LessEqual, 1.0);
  EXPECT_THROW(solve_lp(lp), ConfigError);
}

TEST(MaxMinLinear, SymmetricCrossing) {
  const LPInstance region = box_region(1);
  const std::vector<LinearRow> rows{{{1.0}, 0.0}, {{-1.0}, 1.0}};
  const auto res = solve_maxmin_linear(rows, region);
  ASSERT_EQ(res.status, LPStatus::Optimal);
  EXPECT_NEAR(res.value, 0.5, 1e-12);
  EXPECT_NEAR(res.point[0], 0.5, 1e-12);
}

TEST(MaxMinLinear, SingleRowIsPlainMaximization) {
  LPInstance region = box_region(2);
  region.add({1.0, 1.0}, Relation::LessEqual, 1.5);
  const std::vector<LinearRow> rows{{{2.0, 1.0}, 0.0}};
  const auto res = solve_maxmin_linear(rows, region);
  ASSERT_EQ(res.status, LPStatus::Optimal);
  EXPECT_NEAR(res.value, 2.5, 1e-12);
}

TEST(MaxMinLinear, PropagatesInfeasibleRegion) {
  LPInstance region = box_region(1);
  region.add({1.0}, Relation::GreaterEqual, 2.0);
  const std::vector<LinearRow> rows{{{1.0}, 0.0}};
  EXPECT_EQ(solve_maxmin_linear(rows, region).status, LPStatus::Infeasible);
}

TEST(SumKSmallest, KEqualsRowCountMaximizesPlainSum) {
  const LPInstance region = box_region(2);
  const std::vector<LinearRow> rows{{{1.0, 0.0}, 0.0}, {{0.0, 2.0}, 0.0}, {{-1.0, -1.0}, 1.0}};
  const auto res = sum_k_smallest_epigraph(rows, 3, region);
  ASSERT_EQ(res.status, LPStatus::Optimal);
  // sum = x + 2y + 1 - x - y = 1 + y, maximized at y = 1
  EXPECT_NEAR(res.value, 2.0, 1e-12);
}

TEST(SumKSmallest, KOneReducesToMaxMin) {
  const LPInstance region = box_region(1);
  const std::vector<LinearRow> rows{{{1.0}, 0.0}, {{-1.0}, 1.0}};
  const auto res = sum_k_smallest_epigraph(rows, 1, region);
  ASSERT_EQ(res.status, LPStatus::Optimal);
  EXPECT_NEAR(res.value, 0.5, 1e-12);
}

TEST(SumKSmallest, TwoSmallestOfThree) {
  // Rows {x, 1-x, 0.8}; a 1-D grid gives max of the two smallest = 1.0.
  const LPInstance region = box_region(1);
  const std::vector<LinearRow> rows{{{1.0}, 0.0}, {{-1.0}, 1.0}, {{0.0}, 0.8}};
  double grid_best = -kInfinity;
  for (int s = 0; s <= 100000; ++s) {
    const double x = s / 100000.0;
    std::vector<double> v{x, 1.0 - x, 0.8};
    std::sort(v.begin(), v.end());
    grid_best = std::max(grid_best, v[0] + v[1]);
  }
  EXPECT_NEAR(grid_best, 1.0, 1e-12);
  const auto res = sum_k_smallest_epigraph(rows, 2, region);
  ASSERT_EQ(res.status, LPStatus::Optimal);
  EXPECT_NEAR(res.value, grid_best, 1e-9);
}

TEST(SumKSmallest, WeightedRowsCountMultiplicity) {
  // Multiset {x, x, 1 - x}: two smallest are 2x for x <= 1/2 and 1 above.
  const LPInstance region = box_region(1);
  const std::vector<LinearRow> rows{{{1.0}, 0.0}, {{-1.0}, 1.0}};
  const std::vector<double> weights{2.0, 1.0};
  const auto res = sum_k_smallest_epigraph(rows, 2, region, weights);
  ASSERT_EQ(res.status, LPStatus::Optimal);
  EXPECT_NEAR(res.value, 1.0, 1e-12);
}

TEST(SumKSmallest, RejectsBadK) {
  const LPInstance region = box_region(1);
  const std::vector<LinearRow> rows{{{1.0}, 0.0}};
  EXPECT_THROW(sum_k_smallest_epigraph(rows, 2, region), ConfigError);
  EXPECT_THROW(sum_k_smallest_epigraph(rows, 0, region), ConfigError);
}

class RandomEpigraph : public ::testing::TestWithParam<int> {};

TEST_P(RandomEpigraph, AgreesWithGridSearchAndIsDeterministic) {
  std::mt19937_64 rng(1000 + GetParam());
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  std::uniform_int_distribution<int> dims(1, 4);
  std::uniform_int_distribution<int> nrows(1, 6);
  const std::size_t d = static_cast<std::size_t>(dims(rng));
  LPInstance region = box_region(d);
  std::vector<double> a(d);
  for (auto& v : a) v = std::abs(coef(rng)) + 0.1;
  region.add(a, Relation::LessEqual, 0.5 + std::abs(coef(rng)));
  std::vector<LinearRow> rows(static_cast<std::size_t>(nrows(rng)));
  for (auto& r : rows) {
    r.coeffs.resize(d);
    for (auto& c : r.coeffs) c = coef(rng);
    r.constant = coef(rng);
  }

  const auto res = solve_maxmin_linear(rows, region);
  ASSERT_EQ(res.status, LPStatus::Optimal);
  EXPECT_NEAR(res.value, grid_maxmin(rows, region), 1e-3);

  const auto again = solve_maxmin_linear(rows, region);
  EXPECT_EQ(again.point, res.point);
  EXPECT_EQ(again.value, res.value);

  const auto k1 = sum_k_smallest_epigraph(rows, 1, region);
  ASSERT_EQ(k1.status, LPStatus::Optimal);
  EXPECT_NEAR(k1.value, res.value, 1e-7);
}

INSTANTIATE_TEST_SUITE_P(Instances, RandomEpigraph, ::testing::Range(0, 40));
