// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "localsgd/error.hpp"
#include "localsgd/rng.hpp"
#include "localsgd/trends.hpp"

using namespace localsgd;

namespace {

AggregateRow row(std::int64_t k, std::int64_t h, std::optional<double> acc, std::int64_t t = 0) {
  AggregateRow r;
  r.cell.workers = k;
  r.cell.local_steps = h;
  r.cell.switch_epoch = t;
  r.median_val_top1 = acc;
  return r;
}

std::vector<AggregateRow> grid(const std::function<double(std::int64_t, std::int64_t)>& acc) {
  std::vector<AggregateRow> rows;
  for (std::int64_t k : {2, 4, 8})
    for (std::int64_t h : {1, 2, 4, 8}) rows.push_back(row(k, h, acc(k, h)));
  return rows;
}

}  // namespace

TEST(Spearman, Basics) {
  const std::vector<double> x{1, 2, 3, 4};
  EXPECT_DOUBLE_EQ(spearman(x, std::vector<double>{10, 20, 30, 40}), 1.0);
  EXPECT_DOUBLE_EQ(spearman(x, std::vector<double>{4, 3, 2, 1}), -1.0);
  EXPECT_EQ(spearman(x, std::vector<double>{5, 5, 5, 5}), 0.0);
  EXPECT_DOUBLE_EQ(spearman(std::vector<double>{1, 1, 2}, std::vector<double>{1, 1, 2}), 1.0);
  EXPECT_THROW(spearman(x, std::vector<double>{1}), ContractError);
}

TEST(TrendStats, MonotoneDecreasing) {
  const auto s = trend_stats(grid([](auto k, auto h) { return 1.0 - 0.01 * static_cast<double>(k * h); }));
  EXPECT_DOUBLE_EQ(s.product_correlation, -1.0);
  EXPECT_EQ(s.within_spread_max, 0.0);
  EXPECT_EQ(s.groups, 6);
  EXPECT_EQ(s.cells, 12);
  EXPECT_DOUBLE_EQ(s.between_range, 0.01 * 64 - 0.01 * 2);
}

TEST(TrendStats, AllEqual) {
  const auto s = trend_stats(grid([](auto, auto) { return 0.5; }));
  EXPECT_EQ(s.product_correlation, 0.0);
  EXPECT_EQ(s.within_spread_max, 0.0);
  EXPECT_EQ(s.between_range, 0.0);
  EXPECT_EQ(s.collapse_ratio(), 0.0);
}

TEST(TrendStats, NoisyLogLinearRecoversStrongCorrelation) {
  Rng rng(17);
  const auto s = trend_stats(grid([&](auto k, auto h) {
    return 0.9 - 0.05 * std::log(static_cast<double>(k * h)) + rng.normal(0.0, 0.005);
  }));
  EXPECT_LT(s.product_correlation, -0.9);
  EXPECT_LT(s.collapse_ratio(), 0.5);
}

TEST(TrendStats, WithinGroupSpread) {
  std::vector<AggregateRow> rows{row(1, 2, 0.9), row(2, 1, 0.8), row(2, 2, 0.7), row(4, 2, 0.6), row(2, 4, 0.6)};
  const auto s = trend_stats(rows);
  EXPECT_EQ(s.groups, 3);
  EXPECT_DOUBLE_EQ(s.within_spread_max, 0.1);
  EXPECT_DOUBLE_EQ(s.between_range, 0.85 - 0.6);
}

TEST(TrendStats, NeedsThreeGroups) {
  EXPECT_THROW(trend_stats(std::vector<AggregateRow>{row(2, 1, 0.5), row(1, 2, 0.4), row(4, 1, 0.3)}),
               ContractError);
  // Missing cells are skipped before counting.
  EXPECT_THROW(trend_stats(std::vector<AggregateRow>{row(2, 1, 0.5), row(4, 1, 0.4), row(8, 1, std::nullopt)}),
               ContractError);
}

TEST(SwitchPoint, Correlation) {
  std::vector<AggregateRow> rows;
  for (std::int64_t t : {0, 3, 6, 9}) rows.push_back(row(4, 8, 0.5 + 0.01 * static_cast<double>(t), t));
  EXPECT_DOUBLE_EQ(switch_point_correlation(rows), 1.0);
  EXPECT_THROW(switch_point_correlation(std::vector<AggregateRow>{row(4, 8, 0.5, 3)}), ContractError);
}
