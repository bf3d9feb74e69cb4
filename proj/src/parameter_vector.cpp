// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "localsgd/parameter_vector.hpp"

#include <algorithm>
#include <cmath>

#include "localsgd/error.hpp"

namespace localsgd {

namespace {

std::shared_ptr<const Layout> empty_layout() {
  static const auto layout = std::make_shared<const Layout>();
  return layout;
}

}  // namespace

std::shared_ptr<const Layout> Layout::make(
    const std::vector<std::pair<std::string, std::size_t>>& named_lengths) {
  auto layout = std::make_shared<Layout>();
  std::size_t offset = 0;
  for (const auto& [name, length] : named_lengths) {
    layout->segments_.push_back({name, offset, length});
    offset += length;
  }
  layout->size_ = offset;
  return layout;
}

ParameterVector::ParameterVector(std::shared_ptr<const Layout> layout, double fill)
    : layout_(layout ? std::move(layout) : empty_layout()), values_(layout_->size(), fill) {}

ParameterVector::ParameterVector(std::shared_ptr<const Layout> layout, std::vector<double> values)
    : layout_(layout ? std::move(layout) : empty_layout()), values_(std::move(values)) {
  if (values_.size() != layout_->size()) {
    throw ShapeError("ParameterVector: " + std::to_string(values_.size()) +
                     " values for a layout of size " + std::to_string(layout_->size()));
  }
}

ParameterVector ParameterVector::flat(std::vector<double> values) {
  auto layout = Layout::make({{"w", values.size()}});
  return ParameterVector(std::move(layout), std::move(values));
}

bool ParameterVector::same_layout(const ParameterVector& other) const {
  const Layout* a = layout_ ? layout_.get() : empty_layout().get();
  const Layout* b = other.layout_ ? other.layout_.get() : empty_layout().get();
  return a == b || *a == *b;
}

void ParameterVector::require_same_layout(const ParameterVector& other, const char* what) const {
  if (!same_layout(other)) {
    throw ContractError(std::string(what) + ": parameter layouts differ");
  }
}

std::span<double> ParameterVector::segment(std::size_t index) {
  const auto& s = layout_->segments().at(index);
  return std::span<double>(values_).subspan(s.offset, s.length);
}

std::span<const double> ParameterVector::segment(std::size_t index) const {
  const auto& s = layout_->segments().at(index);
  return std::span<const double>(values_).subspan(s.offset, s.length);
}

bool ParameterVector::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

void ParameterVector::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

double l2_norm(std::span<const double> x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return std::sqrt(sum);
}

double max_abs_diff(const ParameterVector& a, const ParameterVector& b) {
  a.require_same_layout(b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace localsgd
