#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pace/errors.hpp"
#include "pace/market.hpp"
#include "support.hpp"

using namespace pace;

TEST(Normalize, LinearRescalesBudgetsSupplyAndRows) {
  const std::vector<double> b{2, 2}, s{1, 1};
  const auto m = normalize_market(b, DenseMatrix::from_rows({{4, 0}, {0, 4}}), s, Mode::linear);
  EXPECT_DOUBLE_EQ(m.budgets()[0], 0.5);
  EXPECT_DOUBLE_EQ(m.budgets()[1], 0.5);
  EXPECT_DOUBLE_EQ(m.supply()[0], 0.5);
  EXPECT_DOUBLE_EQ(m.supply()[1], 0.5);
  EXPECT_EQ(m.valuations(), DenseMatrix::from_rows({{2, 0}, {0, 2}}));
}

TEST(Normalize, SingleBuyerRowScaledToUnitMean) {
  const std::vector<double> b{1}, s{0.5, 0.5};
  const auto m = normalize_market(b, DenseMatrix::from_rows({{3, 1}}), s, Mode::linear);
  EXPECT_DOUBLE_EQ(m.valuations()(0, 0), 1.5);
  EXPECT_DOUBLE_EQ(m.valuations()(0, 1), 0.5);
  EXPECT_DOUBLE_EQ(m.mean_value(0), 1.0);
}

TEST(Normalize, QuasilinearUsesOneCommonScale) {
  const std::vector<double> b{2, 2}, s{1, 1};
  const auto m =
      normalize_market(b, DenseMatrix::from_rows({{4, 0}, {0, 4}}), s, Mode::quasilinear);
  EXPECT_DOUBLE_EQ(m.budgets()[0], 0.5);
  EXPECT_DOUBLE_EQ(m.budgets()[1], 0.5);
  EXPECT_EQ(m.valuations(), DenseMatrix::from_rows({{1, 0}, {0, 1}}));
  EXPECT_EQ(m.mode(), Mode::quasilinear);
}

TEST(Normalize, IsIdempotent) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_real_distribution<double> u(0.1, 3.0);
    const std::size_t n = 1 + trial % 4, m = 2 + trial % 5;
    std::vector<double> b(n), s(m);
    DenseMatrix v(n, m);
    for (auto& x : b) x = u(rng);
    for (auto& x : s) x = u(rng);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) v(i, j) = u(rng);
    }
    for (Mode mode : {Mode::linear, Mode::quasilinear}) {
      const auto once = normalize_market(b, v, s, mode);
      const auto twice = normalize_market(once.budgets(), once.valuations(), once.supply(), mode);
      EXPECT_EQ(once, twice);
    }
  }
}

TEST(Normalize, ReportsOffendingIndex) {
  const std::vector<double> s{0.5, 0.5};
  try {
    const std::vector<double> b{1, 0};
    normalize_market(b, DenseMatrix::from_rows({{1, 1}, {1, 1}}), s, Mode::linear);
    FAIL();
  } catch (const ZeroBudget& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  try {
    const std::vector<double> b{1, 1};
    normalize_market(b, DenseMatrix::from_rows({{1, 1}, {0, 0}}), s, Mode::linear);
    FAIL();
  } catch (const ZeroValuationRow& e) {
    EXPECT_EQ(e.index(), 1u);
  }
  try {
    const std::vector<double> b{1}, bad{0.5, -1};
    normalize_market(b, DenseMatrix::from_rows({{1, 1}}), bad, Mode::linear);
    FAIL();
  } catch (const ZeroSupply& e) {
    EXPECT_EQ(e.index(), 1u);
  }
}

TEST(Normalize, ValuationOnlyOnZeroSupplyItemIsAZeroRow) {
  const std::vector<double> b{1, 1}, s{1, 0};
  EXPECT_THROW(normalize_market(b, DenseMatrix::from_rows({{1, 1}, {0, 5}}), s, Mode::linear),
               ZeroValuationRow);
}

TEST(Market, FiniteFactoryRejectsUnnormalizedInput) {
  EXPECT_THROW(MarketInstance::finite({0.5, 0.6}, DenseMatrix::from_rows({{1}, {1}}), {1},
                                      Mode::linear),
               InvalidMarket);
  EXPECT_THROW(MarketInstance::finite({1}, DenseMatrix::from_rows({{2}}), {1}, Mode::linear),
               InvalidMarket);
  EXPECT_THROW(MarketInstance::finite({1}, DenseMatrix::from_rows({{1, 1}}), {1}, Mode::linear),
               DimensionMismatch);
}

TEST(Market, ValueOfFiniteAndContinuum) {
  const auto m = testing_support::complementary();
  EXPECT_DOUBLE_EQ(m.value_of(0, Item::finite(0)), 2.0);
  EXPECT_DOUBLE_EQ(m.value_of(1, Item::finite(0)), 0.0);
  EXPECT_THROW(m.value_of(0, Item::finite(2)), IndexOutOfRange);

  const auto c =
      MarketInstance::continuum({0.5, 0.5}, {{2.0, 0.0}, {0.0, 1.0}}, Mode::linear);
  EXPECT_DOUBLE_EQ(c.value_of(0, Item::at(0.5)), 1.0);
  EXPECT_DOUBLE_EQ(c.value_of(1, Item::at(0.5)), 1.0);
  EXPECT_DOUBLE_EQ(c.value_of(1, Item::at(0.9)), 1.0);
  EXPECT_NEAR(c.second_moment(0), 4.0 / 3.0, 1e-15);
  EXPECT_DOUBLE_EQ(c.max_value(0), 2.0);
}

TEST(Market, ContinuumRejectsNegativeValues) {
  EXPECT_THROW(MarketInstance::continuum({1.0}, {{-4.0, 3.0}}, Mode::linear), InvalidMarket);
}

TEST(Market, QuasilinearBetaMin) {
  const auto m = MarketInstance::finite({0.5, 0.5}, DenseMatrix::from_rows({{2, 0}, {0, 2}}),
                                        {0.5, 0.5}, Mode::quasilinear);
  EXPECT_DOUBLE_EQ(m.ql_beta_min(0), 0.5 / (1.0 + 1.0));
}

TEST(ProportionalShare, NormalizedMarketGivesBudgets) {
  const auto m = testing_support::random_market(4, 6, 3);
  const std::vector<double> u(4, 1.0);
  const auto share = proportional_share_utilities(m, u);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(share.utilities[i], m.budgets()[i], 1e-14);
    EXPECT_NEAR(share.fraction[i], m.budgets()[i], 1e-14);
  }
}

TEST(ProportionalShare, SingleBuyerRatioIsOne) {
  const auto m = MarketInstance::finite({1}, DenseMatrix::from_rows({{1.5, 0.5}}), {0.5, 0.5},
                                        Mode::linear);
  const std::vector<double> u{1.0};
  EXPECT_DOUBLE_EQ(proportional_share_utilities(m, u).fraction[0], 1.0);
}

TEST(ProportionalShare, ComplementaryHalf) {
  const std::vector<double> u{1.0, 1.0};
  const auto share = proportional_share_utilities(testing_support::complementary(), u);
  EXPECT_DOUBLE_EQ(share.fraction[0], 0.5);
  EXPECT_DOUBLE_EQ(share.fraction[1], 0.5);
}

TEST(ProportionalShare, RejectsWrongLength) {
  const std::vector<double> u{1.0};
  EXPECT_THROW(proportional_share_utilities(testing_support::complementary(), u),
               DimensionMismatch);
}

TEST(ModeText, RoundTrip) {
  EXPECT_EQ(parse_mode("linear"), Mode::linear);
  EXPECT_EQ(parse_mode("ql"), Mode::quasilinear);
  EXPECT_EQ(parse_mode(to_string(Mode::quasilinear)), Mode::quasilinear);
  EXPECT_THROW(parse_mode("cobb-douglas"), Error);
}
