#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "fairrec/population_gen.hpp"

using namespace fairrec;

namespace {

std::set<std::vector<double>> distinct_rows(const UtilityMatrix& w) {
  std::set<std::vector<double>> rows;
  for (std::size_t i = 0; i < w.users(); ++i) rows.emplace(w.row(i).begin(), w.row(i).end());
  return rows;
}

}  // namespace

TEST(GenTwoType, Construction) {
  const auto w = gen_two_type({3, 2, 1}, 0.5, 4);
  const std::vector<double> expected{3, 2, 1, 3, 2, 1, 1, 2, 3, 1, 2, 3};
  EXPECT_EQ(w.values(), expected);
  ASSERT_TRUE(w.type_of().has_value());
  EXPECT_EQ(*w.type_of(), (std::vector<int>{0, 0, 1, 1}));
}

TEST(GenTwoType, RoundingAndErrors) {
  const auto w = gen_two_type({3, 2, 1}, 0.25, 8);
  EXPECT_EQ(std::count(w.type_of()->begin(), w.type_of()->end(), 0), 2);
  EXPECT_EQ(distinct_rows(w).size(), 2u);
  // 0.5 * 3 = 1.5 rounds half up.
  const auto odd = gen_two_type({3, 2, 1}, 0.5, 3);
  EXPECT_EQ(std::count(odd.type_of()->begin(), odd.type_of()->end(), 0), 2);
  EXPECT_THROW(gen_two_type({3, 2, 1}, 0.05, 4), ConfigError);
  EXPECT_THROW(gen_two_type({3, 2, 1}, 0.95, 4), ConfigError);
  EXPECT_THROW(gen_two_type({3, 0, 1}, 0.5, 4), ConfigError);
}

TEST(GenHomogeneous, Construction) {
  const auto w = gen_homogeneous({0.9, 0.1}, 3);
  EXPECT_EQ(w.users(), 3u);
  EXPECT_EQ(distinct_rows(w).size(), 1u);
  EXPECT_THROW(gen_homogeneous({0.9, 0.1}, 0), ConfigError);
}

TEST(GenMisestimation, Construction) {
  const auto pop = gen_misestimation({3, 2, 1}, 0.4, 10, 7);
  EXPECT_EQ(pop.misestimated.size(), 2u);
  EXPECT_EQ(distinct_rows(pop.truth).size(), 2u);
  EXPECT_EQ(distinct_rows(pop.estimate).size(), 3u);
  std::size_t type1 = 0, type2 = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    const bool cold = std::find(pop.misestimated.begin(), pop.misestimated.end(), i) !=
                      pop.misestimated.end();
    const std::vector<double> est(pop.estimate.row(i).begin(), pop.estimate.row(i).end());
    const std::vector<double> tru(pop.truth.row(i).begin(), pop.truth.row(i).end());
    if (cold) {
      EXPECT_EQ(est, (std::vector<double>{2, 2, 2}));
      (tru.front() == 3 ? type1 : type2)++;
    } else {
      EXPECT_EQ(est, tru);
    }
  }
  EXPECT_EQ(type1, 1u);
  EXPECT_EQ(type2, 1u);
}

TEST(GenMisestimation, PalindromicPriorAndErrors) {
  const auto pop = gen_misestimation({5, 4, 2, 1.5, 1}, 0.3, 11, 1);
  for (std::size_t i : pop.misestimated) {
    const auto r = pop.estimate.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) EXPECT_EQ(r[j], r[r.size() - 1 - j]);
  }
  EXPECT_THROW(gen_misestimation({3, 2, 1}, 0.45, 10, 0), ConfigError);
  EXPECT_THROW(gen_misestimation({3, 2, 1}, 0.01, 10, 0), ConfigError);
}

TEST(Generators, Deterministic) {
  const auto a = gen_misestimation({3, 2, 1}, 0.3, 20, 42);
  const auto b = gen_misestimation({3, 2, 1}, 0.3, 20, 42);
  EXPECT_EQ(a.truth.values(), b.truth.values());
  EXPECT_EQ(a.estimate.values(), b.estimate.values());
  EXPECT_EQ(a.misestimated, b.misestimated);
  EXPECT_EQ(gen_random(5, 4, 9).values(), gen_random(5, 4, 9).values());
  EXPECT_NE(gen_random(5, 4, 9).values(), gen_random(5, 4, 10).values());
  PopulationRecipe r;
  r.v = {3, 2, 1};
  r.m = 6;
  EXPECT_EQ(generate(r).values(), gen_two_type({3, 2, 1}, 0.5, 6).values());
}
