// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "localsgd/dataset.hpp"
#include "localsgd/parameter_vector.hpp"

namespace localsgd {

enum class ModelKind { quadratic, linear_regression, logistic_regression, mlp };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& text);

/// Model family plus its fixed hyperparameters.
///
///  quadratic            layer_sizes = {d}. Example i contributes
///                       1/2 (w - c_i)^T A (w - c_i), c_i = target + x_i.
///  linear-regression    layer_sizes = {in, out}; squared error against the
///                       one-hot label (or the label value when out == 1).
///  logistic-regression  layer_sizes = {in, classes}; softmax cross-entropy.
///  mlp                  layer_sizes = {in, hidden..., classes}; affine+ReLU
///                       hidden layers, softmax cross-entropy head.
///
/// The loss always includes (lambda/2) |w|^2 so that the gradient carries the
/// weight-decay term lambda * w.
struct ModelSpec {
  ModelKind kind = ModelKind::mlp;
  std::vector<std::size_t> layer_sizes;
  std::uint64_t init_seed = 0;
  double weight_decay = 0.0;
  std::vector<double> curvature;  // quadratic only: d x d, row-major, SPD
  std::vector<double> target;     // quadratic only: d

  static ModelSpec quadratic(std::vector<double> curvature, std::vector<double> target,
                             double weight_decay = 0.0);
  /// Quadratic with a diagonal curvature matrix.
  static ModelSpec quadratic_diagonal(const std::vector<double>& diagonal,
                                      std::vector<double> target, double weight_decay = 0.0);

  /// Throws ConfigError on inconsistent sizes or a non-SPD curvature matrix.
  void validate() const;

  std::size_t input_dim() const { return layer_sizes.front(); }
  std::size_t output_dim() const { return layer_sizes.back(); }
  bool is_classifier() const;
};

std::shared_ptr<const Layout> make_layout(const ModelSpec& spec);
std::size_t parameter_count(const ModelSpec& spec);

/// Zeros for the quadratic and the single-layer models; He-normal weights
/// (std sqrt(2 / fan_in)) and zero biases for the MLP.
ParameterVector init_weights(const ModelSpec& spec, std::uint64_t seed);

struct LossGrad {
  double loss = 0.0;          // mean batch loss + (lambda/2) |w|^2
  ParameterVector grad;       // mean batch gradient + lambda * w
  std::size_t correct = 0;    // top-1 hits in the batch (classifiers only)
};

LossGrad loss_and_grad(const ModelSpec& spec, const ParameterVector& w, const MiniBatch& batch);

/// Same objective as loss_and_grad, without the gradient.
double loss_value(const ModelSpec& spec, const ParameterVector& w, const MiniBatch& batch);

/// Central differences, one coordinate at a time. step must be > 0.
ParameterVector finite_diff_grad(const ModelSpec& spec, const ParameterVector& w,
                                 const MiniBatch& batch, double step);

struct EvalResult {
  double loss = 0.0;  // mean data loss, no regularizer
  double top1 = 0.0;  // accuracy in [0, 1]; NaN for non-classifiers
};

EvalResult evaluate_model(const ModelSpec& spec, const ParameterVector& w, const Dataset& ds);

}  // namespace localsgd
