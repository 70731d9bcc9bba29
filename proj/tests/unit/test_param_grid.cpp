#include <gtest/gtest.h>

#include <random>

#include "pgdschwarz/param_grid.hpp"

using namespace pgdschwarz;

TEST(ParamGrid, SpacingCountsIntervalsExactly) {
  EXPECT_EQ(make_uniform_axis("mu", 1.0, 50.0, 1e-3).size(), 49001u);
  EXPECT_EQ(make_uniform_axis("mu", 1.0, 50.0, 1e-2).size(), 4901u);
  const auto a = make_uniform_axis("x", 0.0, 1.0, 0.1);
  EXPECT_EQ(a.size(), 11u);
  EXPECT_DOUBLE_EQ(a.hi(), 1.0);
  EXPECT_TRUE(a.uniform());
}

TEST(ParamGrid, NonCommensurateSpacingNeverExceedsRequest) {
  const auto a = make_uniform_axis("x", 0.0, 1.0, 0.3);
  EXPECT_EQ(a.size(), 5u);
  for (std::size_t k = 1; k < a.size(); ++k) EXPECT_LE(a.node(k) - a.node(k - 1), 0.3);
}

TEST(ParamGrid, RejectsInvalidAxes) {
  EXPECT_THROW(make_uniform_axis("x", 1.0, 1.0, 0.1), std::invalid_argument);
  EXPECT_THROW(make_uniform_axis("x", 0.0, 1.0, -0.1), std::invalid_argument);
  EXPECT_THROW(ParamAxis("x", {0.0, 0.5, 0.5}), std::invalid_argument);
  EXPECT_THROW(ParamAxis("x", {0.0}), std::invalid_argument);
}

TEST(ParamGrid, InterpolationIsExactAtNodes) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (const auto& axis : {make_uniform_axis("u", -10.0, 10.0, 0.1), ParamAxis("n", {0.0, 0.1, 0.5, 0.55, 2.0, 7.0})}) {
    std::vector<double> v(axis.size());
    for (auto& x : v) x = d(rng);
    for (std::size_t k = 0; k < axis.size(); ++k) EXPECT_EQ(interp_mode(axis, v, axis.node(k)), v[k]);
  }
}

TEST(ParamGrid, InterpolationBracketsAndIsLinear) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  const ParamAxis axis("n", {0.0, 0.1, 0.5, 0.55, 2.0, 7.0});
  std::vector<double> v(axis.size()), w(axis.size()), c(axis.size());
  for (std::size_t k = 0; k < axis.size(); ++k) {
    v[k] = d(rng);
    w[k] = d(rng);
    c[k] = 2.0 * v[k] - 3.0 * w[k];
  }
  std::uniform_real_distribution<double> xs(0.0, 7.0);
  for (int s = 0; s < 200; ++s) {
    const double x = xs(rng);
    const auto b = axis.bracket(x);
    const double lo = std::min(v[b.left], v[b.left + 1]);
    const double hi = std::max(v[b.left], v[b.left + 1]);
    const double y = interp_mode(axis, v, x);
    EXPECT_GE(y, lo - 1e-15);
    EXPECT_LE(y, hi + 1e-15);
    EXPECT_NEAR(interp_mode(axis, c, x), 2.0 * y - 3.0 * interp_mode(axis, w, x), 1e-13);
  }
  EXPECT_DOUBLE_EQ(interp_mode(axis, v, 0.3), 0.5 * (v[1] + v[2]));
}

TEST(ParamGrid, OutOfRangeThrows) {
  const auto a = make_uniform_axis("mu", 1.0, 50.0, 1.0);
  std::vector<double> v(a.size(), 1.0);
  EXPECT_THROW(interp_mode(a, v, 0.5), std::out_of_range);
  EXPECT_THROW(interp_mode(a, v, 50.5), std::out_of_range);
  EXPECT_THROW(lookup({{"a", 1.0}}, "mu"), std::invalid_argument);
}
