// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace localsgd {

struct Segment {
  std::string name;
  std::size_t offset = 0;
  std::size_t length = 0;

  bool operator==(const Segment&) const = default;
};

/// Named, contiguous, disjoint segments covering a flat vector.
class Layout {
 public:
  Layout() = default;

  /// Segments are laid out back to back in the given order.
  static std::shared_ptr<const Layout> make(
      const std::vector<std::pair<std::string, std::size_t>>& named_lengths);

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t size() const { return size_; }

  bool operator==(const Layout& other) const { return segments_ == other.segments_; }

 private:
  std::vector<Segment> segments_;
  std::size_t size_ = 0;
};

/// Flat weight vector with a shared segment layout. This is the unit that
/// workers average and that the cost model accounts for.
class ParameterVector {
 public:
  ParameterVector() : ParameterVector(std::shared_ptr<const Layout>{}) {}
  explicit ParameterVector(std::shared_ptr<const Layout> layout, double fill = 0.0);
  ParameterVector(std::shared_ptr<const Layout> layout, std::vector<double> values);

  /// Single-segment vector named "w".
  static ParameterVector flat(std::vector<double> values);

  std::size_t size() const { return values_.size(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }
  double& operator[](std::size_t i) { return values_[i]; }
  double operator[](std::size_t i) const { return values_[i]; }

  const Layout& layout() const { return *layout_; }
  const std::shared_ptr<const Layout>& layout_ptr() const { return layout_; }
  bool same_layout(const ParameterVector& other) const;

  std::span<double> segment(std::size_t index);
  std::span<const double> segment(std::size_t index) const;
  std::size_t segment_count() const { return layout_->segments().size(); }

  bool all_finite() const;
  void fill(double v);

  /// Throws ContractError unless `other` has the same layout.
  void require_same_layout(const ParameterVector& other, const char* what) const;

 private:
  std::shared_ptr<const Layout> layout_;
  std::vector<double> values_;
};

double l2_norm(std::span<const double> x);
double max_abs_diff(const ParameterVector& a, const ParameterVector& b);

}  // namespace localsgd
