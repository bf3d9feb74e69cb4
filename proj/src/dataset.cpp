// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "localsgd/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "localsgd/error.hpp"
#include "localsgd/rng.hpp"

namespace localsgd {

Dataset::Dataset(std::vector<double> features, std::vector<int> labels, std::size_t dim,
                 int num_classes)
    : features_(std::move(features)), labels_(std::move(labels)), dim_(dim), num_classes_(num_classes) {
  if (labels_.empty()) throw ContractError("Dataset: needs at least one example");
  if (dim_ == 0) throw ContractError("Dataset: feature dimension must be positive");
  if (features_.size() != labels_.size() * dim_) {
    throw ShapeError("Dataset: " + std::to_string(features_.size()) + " feature values for " +
                     std::to_string(labels_.size()) + " examples of dimension " + std::to_string(dim_));
  }
  if (num_classes_ < 1) throw ContractError("Dataset: num_classes must be >= 1");
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (labels_[i] < 0 || labels_[i] >= num_classes_) {
      throw ContractError("Dataset: label " + std::to_string(labels_[i]) + " of example " +
                          std::to_string(i) + " outside [0, " + std::to_string(num_classes_) + ")");
    }
  }
}

MiniBatch full_batch(const Dataset& ds) {
  MiniBatch batch{&ds, std::vector<std::size_t>(ds.size())};
  std::iota(batch.indices.begin(), batch.indices.end(), std::size_t{0});
  return batch;
}

std::vector<std::size_t> shuffle_epoch(const Dataset& ds, std::int64_t epoch, std::uint64_t seed) {
  std::vector<std::size_t> perm(ds.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(derive_seed(seed, {0x5348u /* "SH" */, static_cast<std::uint64_t>(epoch)}));
  // Fisher-Yates, highest index first.
  for (std::size_t i = perm.size(); i > 1; --i) {
    const std::size_t j = rng.below(i);
    std::swap(perm[i - 1], perm[j]);
  }
  return perm;
}

std::size_t ShardGeometry::iterations() const {
  const std::size_t global = batch * workers;
  return (n + global - 1) / global;
}

std::size_t ShardGeometry::offset(std::size_t k, std::size_t m) const {
  return (m - 1) * batch + (k - 1) * iterations() * batch;
}

std::size_t ShardGeometry::full_iterations() const {
  const std::size_t s = iterations();
  const std::size_t last_start = (workers - 1) * s * batch;
  if (last_start >= n) return 0;
  return std::min(s, (n - last_start) / batch);
}

MiniBatch minibatch(const Dataset& ds, std::span<const std::size_t> perm,
                    const ShardGeometry& geometry, std::size_t k, std::size_t m) {
  if (geometry.workers == 0 || geometry.batch == 0) {
    throw ContractError("minibatch: K and B must be >= 1");
  }
  if (perm.size() != ds.size() || geometry.n != ds.size()) {
    throw ShapeError("minibatch: permutation/geometry size does not match dataset");
  }
  const std::size_t s = geometry.iterations();
  if (k < 1 || k > geometry.workers || m < 1 || m > s) {
    throw IndexError("minibatch: (k=" + std::to_string(k) + ", m=" + std::to_string(m) +
                     ") outside [1," + std::to_string(geometry.workers) + "]x[1," + std::to_string(s) + "]");
  }
  const std::size_t begin = std::min(geometry.offset(k, m), perm.size());
  const std::size_t end = std::min(begin + geometry.batch, perm.size());
  return MiniBatch{&ds, std::vector<std::size_t>(perm.begin() + begin, perm.begin() + end)};
}

// Loaders ----------------------------------------------------------------------

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) {
    throw ParseError(path.string() + ": truncated header at byte offset " + std::to_string(offset) +
                     " (file has " + std::to_string(bytes.size()) + " bytes)");
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

struct IdxArray {
  std::vector<std::size_t> dims;
  std::vector<unsigned char> bytes;
  std::size_t data_offset = 0;
};

// Unsigned-byte IDX only: magic 0x00 0x00 0x08 <ndims>, then big-endian dims.
IdxArray parse_idx(const std::filesystem::path& path, std::uint32_t expected_ndims) {
  IdxArray arr;
  arr.bytes = read_file(path);
  const std::uint32_t magic = read_be32(arr.bytes, 0, path);
  const std::uint32_t expected_magic = 0x00000800u | expected_ndims;
  if (magic != expected_magic) {
    std::ostringstream msg;
    msg << path.string() << ": bad magic at byte offset 0: expected 0x" << std::hex
        << expected_magic << ", got 0x" << magic;
    throw ParseError(msg.str());
  }
  std::size_t count = 1;
  for (std::uint32_t d = 0; d < expected_ndims; ++d) {
    arr.dims.push_back(read_be32(arr.bytes, 4 + 4 * d, path));
    count *= arr.dims.back();
  }
  arr.data_offset = 4 + 4 * expected_ndims;
  const std::size_t expected_len = arr.data_offset + count;
  if (arr.bytes.size() != expected_len) {
    throw ParseError(path.string() + ": expected " + std::to_string(expected_len) + " bytes, got " +
                     std::to_string(arr.bytes.size()) + " (payload starts at byte offset " +
                     std::to_string(arr.data_offset) + ")");
  }
  return arr;
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 std::size_t max_examples) {
  const IdxArray img = parse_idx(images, 3);
  const IdxArray lab = parse_idx(labels, 1);
  if (img.dims[0] != lab.dims[0]) {
    throw ParseError(images.string() + ": " + std::to_string(img.dims[0]) + " images but " +
                     labels.string() + " has " + std::to_string(lab.dims[0]) + " labels");
  }
  std::size_t n = img.dims[0];
  if (max_examples > 0) n = std::min(n, max_examples);
  const std::size_t dim = img.dims[1] * img.dims[2];

  std::vector<double> features(n * dim);
  for (std::size_t i = 0; i < n * dim; ++i) features[i] = img.bytes[img.data_offset + i] / 255.0;
  std::vector<int> y(n);
  int num_classes = 1;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = lab.bytes[lab.data_offset + i];
    num_classes = std::max(num_classes, y[i] + 1);
  }
  return Dataset(std::move(features), std::move(y), dim, num_classes);
}

Dataset load_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  if (header.size() < 2 || header[0] != "label") {
    throw ParseError(path.string() + ": header must be `label,f0,f1,...`");
  }
  for (std::size_t j = 1; j < header.size(); ++j) {
    if (header[j] != "f" + std::to_string(j - 1)) {
      throw ParseError(path.string() + ": header column " + std::to_string(j) + " is `" + header[j] +
                       "`, expected `f" + std::to_string(j - 1) + "`");
    }
  }
  const std::size_t dim = header.size() - 1;

  std::vector<double> features;
  std::vector<int> labels;
  int num_classes = 1;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t col = 0;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (true) {
      const char* comma = std::find(p, end, ',');
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(p, comma, value);
      if (ec != std::errc() || ptr != comma) {
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad number in column " +
                         std::to_string(col));
      }
      if (col == 0) {
        if (value < 0 || value != std::floor(value)) {
          throw ParseError(path.string() + ":" + std::to_string(line_no) + ": label must be a non-negative integer");
        }
        labels.push_back(static_cast<int>(value));
        num_classes = std::max(num_classes, labels.back() + 1);
      } else {
        features.push_back(value);
      }
      ++col;
      if (comma == end) break;
      p = comma + 1;
    }
    if (col != dim + 1) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(dim + 1) + " columns, got " + std::to_string(col));
    }
  }
  if (labels.empty()) throw ParseError(path.string() + ": no data rows");
  return Dataset(std::move(features), std::move(labels), dim, num_classes);
}

namespace {

Dataset generate_quadratic(const SyntheticQuadraticSource& src) {
  if (src.n == 0 || src.dim == 0) throw ConfigError("data: n and dim must be positive");
  Rng rng(derive_seed(src.seed, {0x5155u /* "QU" */, src.split}));
  std::vector<double> features(src.n * src.dim, 0.0);
  if (src.noise > 0.0) {
    for (double& v : features) v = rng.normal(0.0, src.noise);
  }
  return Dataset(std::move(features), std::vector<int>(src.n, 0), src.dim, 1);
}

Dataset generate_blobs(const SyntheticBlobsSource& src) {
  if (src.n == 0 || src.dim == 0) throw ConfigError("data: n and dim must be positive");
  if (src.classes < 2) throw ConfigError("data.classes: need at least 2 classes");
  if (src.clusters < 1) throw ConfigError("data.clusters: need at least 1 centre per class");
  const auto centre_count = static_cast<std::uint64_t>(src.classes) * static_cast<std::uint64_t>(src.clusters);
  Rng centre_rng(derive_seed(src.seed, {0x424Cu /* "BL" */}));
  std::vector<double> centres(centre_count * src.dim);
  for (double& c : centres) c = centre_rng.normal(0.0, src.separation);

  Rng rng(derive_seed(src.seed, {0x424Cu, 1 + src.split}));
  std::vector<double> features(src.n * src.dim);
  std::vector<int> labels(src.n);
  const auto classes = static_cast<std::uint64_t>(src.classes);
  for (std::size_t i = 0; i < src.n; ++i) {
    // Round-robin over centres keeps the classes balanced.
    const std::uint64_t centre = i % centre_count;
    const int cls = static_cast<int>(centre % classes);
    for (std::size_t d = 0; d < src.dim; ++d) {
      features[i * src.dim + d] = centres[centre * src.dim + d] + rng.normal(0.0, src.spread);
    }
    labels[i] = cls;
    if (src.label_noise > 0.0 && rng.uniform() < src.label_noise) {
      labels[i] = static_cast<int>(rng.below(classes));
    }
  }
  return Dataset(std::move(features), std::move(labels), src.dim, src.classes);
}

}  // namespace

Dataset load_or_generate(const DataSource& source) {
  return std::visit(
      [](const auto& src) -> Dataset {
        using T = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<T, IdxSource>) {
          return load_idx(src.images, src.labels, src.max_examples);
        } else if constexpr (std::is_same_v<T, CsvSource>) {
          return load_csv(src.path);
        } else if constexpr (std::is_same_v<T, SyntheticQuadraticSource>) {
          return generate_quadratic(src);
        } else {
          return generate_blobs(src);
        }
      },
      source);
}

}  // namespace localsgd
