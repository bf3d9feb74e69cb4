// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "localsgd/experiment.hpp"

namespace localsgd {

/// Spearman rank correlation with average ranks for ties. Returns 0 when
/// either side has no variance.
double spearman(std::span<const double> x, std::span<const double> y);

struct TrendStats {
  double product_correlation = 0.0;  // log(H*K) vs median val_top1
  double switch_correlation = 0.0;   // T vs median val_top1
  double within_spread_max = 0.0;    // largest range inside one H*K group
  double within_spread_mean = 0.0;
  double between_range = 0.0;        // max - min of the per-product group means
  std::int64_t groups = 0;
  std::int64_t cells = 0;

  /// within_spread_max / between_range, 0 when both are 0.
  double collapse_ratio() const;
};

/// Cells without a median accuracy are ignored. Needs at least three distinct
/// H*K products among the remaining cells, else throws ContractError.
TrendStats trend_stats(std::span<const AggregateRow> rows);

/// Rank correlation between switch epoch and median accuracy alone. Needs at
/// least two distinct switch epochs.
double switch_point_correlation(std::span<const AggregateRow> rows);

}  // namespace localsgd
