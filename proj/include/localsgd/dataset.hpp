// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace localsgd {

/// Immutable set of labelled feature vectors stored row-major.
class Dataset {
 public:
  Dataset(std::vector<double> features, std::vector<int> labels, std::size_t dim,
          int num_classes);

  std::size_t size() const { return labels_.size(); }
  std::size_t dim() const { return dim_; }
  int num_classes() const { return num_classes_; }

  std::span<const double> features(std::size_t i) const {
    return std::span<const double>(features_).subspan(i * dim_, dim_);
  }
  int label(std::size_t i) const { return labels_[i]; }

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<double> features_;
  std::vector<int> labels_;
  std::size_t dim_;
  int num_classes_;
};

/// Indices into a dataset. Holds a reference to it; the dataset must outlive the batch.
struct MiniBatch {
  const Dataset* data = nullptr;
  std::vector<std::size_t> indices;

  std::size_t size() const { return indices.size(); }
  bool empty() const { return indices.empty(); }
};

MiniBatch full_batch(const Dataset& ds);

/// Permutation of [0, N) that depends only on (seed, epoch).
std::vector<std::size_t> shuffle_epoch(const Dataset& ds, std::int64_t epoch, std::uint64_t seed);

/// How one epoch's permutation is split between K workers with per-worker batch B.
struct ShardGeometry {
  std::size_t n = 0;        // dataset size
  std::size_t workers = 1;  // K
  std::size_t batch = 1;    // B

  /// ceil(N / (B K)), iterations per epoch before truncation.
  std::size_t iterations() const;
  /// Offset of worker k's m-th batch, both 1-based: (m-1)B + (k-1)SB.
  std::size_t offset(std::size_t k, std::size_t m) const;
  /// Number of leading iterations in which every worker gets a full batch of B.
  /// Iterations past this point are dropped so the workers stay in lockstep.
  std::size_t full_iterations() const;
};

/// Worker k's m-th batch (1-based) from the epoch permutation. The batch is
/// truncated (possibly to empty) when it runs past the end of the permutation.
MiniBatch minibatch(const Dataset& ds, std::span<const std::size_t> perm,
                    const ShardGeometry& geometry, std::size_t k, std::size_t m);

// Data sources ---------------------------------------------------------------

struct IdxSource {
  std::filesystem::path images;
  std::filesystem::path labels;
  std::size_t max_examples = 0;  // 0 = all
};

/// CSV with header `label,f0,f1,...`.
struct CsvSource {
  std::filesystem::path path;
};

/// Points c_i = offset_i where offset_i ~ N(0, noise^2 I). With the quadratic
/// model, c_i is added to the model's target.
struct SyntheticQuadraticSource {
  std::size_t n = 64;
  std::size_t dim = 1;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t split = 0;
};

/// Gaussian class clusters. Class centres depend only on `seed`; the samples
/// also depend on `split` so train and validation sets share their centres.
struct SyntheticBlobsSource {
  std::size_t n = 1000;
  std::size_t dim = 2;
  int classes = 2;
  int clusters = 1;         // centres per class
  double separation = 4.0;  // centres ~ N(0, separation^2 I)
  double spread = 1.0;      // within-class standard deviation
  double label_noise = 0.0; // fraction of labels replaced by a uniform draw
  std::uint64_t seed = 0;
  std::uint64_t split = 0;
};

using DataSource = std::variant<IdxSource, CsvSource, SyntheticQuadraticSource, SyntheticBlobsSource>;

Dataset load_or_generate(const DataSource& source);

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t max_examples = 0);
Dataset load_csv(const std::filesystem::path& path);

}  // namespace localsgd
