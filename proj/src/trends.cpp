// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "localsgd/trends.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "localsgd/error.hpp"

namespace localsgd {

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t q = i; q <= j; ++q) ranks[order[q]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("spearman: length mismatch");
  if (x.size() < 2) return 0.0;
  return pearson(average_ranks(x), average_ranks(y));
}

double TrendStats::collapse_ratio() const {
  if (between_range == 0.0) return within_spread_max == 0.0 ? 0.0 : INFINITY;
  return within_spread_max / between_range;
}

TrendStats trend_stats(std::span<const AggregateRow> rows) {
  std::vector<double> log_product, switch_epoch, top1;
  std::map<std::int64_t, std::vector<double>> groups;
  for (const auto& r : rows) {
    if (!r.median_val_top1) continue;
    log_product.push_back(std::log(static_cast<double>(r.cell.product())));
    switch_epoch.push_back(static_cast<double>(r.cell.switch_epoch));
    top1.push_back(*r.median_val_top1);
    groups[r.cell.product()].push_back(*r.median_val_top1);
  }
  if (groups.size() < 3) {
    throw ContractError("trend_stats: need at least 3 H*K product groups, got " + std::to_string(groups.size()));
  }

  TrendStats s;
  s.cells = static_cast<std::int64_t>(top1.size());
  s.groups = static_cast<std::int64_t>(groups.size());
  s.product_correlation = spearman(log_product, top1);
  s.switch_correlation = spearman(switch_epoch, top1);

  double lo = INFINITY, hi = -INFINITY, spread_sum = 0.0;
  std::int64_t multi = 0;
  for (const auto& [product, values] : groups) {
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
    if (values.size() >= 2) {
      const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
      const double range = *mx - *mn;
      s.within_spread_max = std::max(s.within_spread_max, range);
      spread_sum += range;
      ++multi;
    }
  }
  s.between_range = hi - lo;
  s.within_spread_mean = multi > 0 ? spread_sum / static_cast<double>(multi) : 0.0;
  return s;
}

double switch_point_correlation(std::span<const AggregateRow> rows) {
  std::vector<double> t, top1;
  std::set<std::int64_t> distinct;
  for (const auto& r : rows) {
    if (!r.median_val_top1) continue;
    t.push_back(static_cast<double>(r.cell.switch_epoch));
    top1.push_back(*r.median_val_top1);
    distinct.insert(r.cell.switch_epoch);
  }
  if (distinct.size() < 2) throw ContractError("switch_point_correlation: need at least 2 switch epochs");
  return spearman(t, top1);
}

}  // namespace localsgd
