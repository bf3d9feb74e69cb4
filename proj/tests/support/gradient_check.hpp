// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "localsgd/model.hpp"
#include "localsgd/rng.hpp"

namespace localsgd::gradcheck {

/// max_i |a_i - f_i| / max(max_i |f_i|, 1e-12)
inline double relative_error(const ParameterVector& analytic, const ParameterVector& numeric) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max(scale, std::abs(numeric[i]));
  }
  return diff / std::max(scale, 1e-12);
}

/// One model of every kind, small enough for central differences.
inline std::vector<ModelSpec> gradient_check_models() {
  std::vector<ModelSpec> out;
  // Symmetric positive definite 3x3 with off-diagonal terms.
  out.push_back(ModelSpec::quadratic({2.0, 0.3, 0.1, 0.3, 1.0, -0.2, 0.1, -0.2, 0.5}, {1.0, -1.0, 0.5}, 1e-3));
  ModelSpec lin;
  lin.kind = ModelKind::linear_regression;
  lin.layer_sizes = {4, 3};
  lin.weight_decay = 1e-3;
  out.push_back(lin);
  ModelSpec logit;
  logit.kind = ModelKind::logistic_regression;
  logit.layer_sizes = {4, 3};
  logit.weight_decay = 1e-3;
  out.push_back(logit);
  ModelSpec mlp;
  mlp.kind = ModelKind::mlp;
  mlp.layer_sizes = {4, 8, 3};
  mlp.weight_decay = 1e-3;
  out.push_back(mlp);
  ModelSpec deep = mlp;
  deep.layer_sizes = {5, 7, 6, 3};
  out.push_back(deep);
  return out;
}

/// Random dataset matching `spec` and a random weight vector, both from `rng`.
inline std::pair<Dataset, ParameterVector> random_problem(const ModelSpec& spec, Rng& rng, std::size_t n) {
  const std::size_t d = spec.input_dim();
  const int classes = spec.is_classifier() ? static_cast<int>(spec.output_dim())
                      : spec.kind == ModelKind::linear_regression ? static_cast<int>(spec.output_dim())
                                                                  : 1;
  std::vector<double> x(n * d);
  for (double& v : x) v = rng.normal();
  std::vector<int> y(n);
  for (int& v : y) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  ParameterVector w(make_layout(spec), 0.0);
  for (double& v : w.values()) v = rng.normal(0.0, 0.5);
  return {Dataset(std::move(x), std::move(y), d, classes), std::move(w)};
}

struct GradientCheckResult {
  double worst = 0.0;
  int draws = 0;
};

inline GradientCheckResult check_gradients(const ModelSpec& spec, int draws, std::uint64_t seed) {
  Rng rng(seed);
  GradientCheckResult r;
  for (int i = 0; i < draws; ++i) {
    auto [ds, w] = random_problem(spec, rng, 8);
    const MiniBatch batch = full_batch(ds);
    const auto analytic = loss_and_grad(spec, w, batch).grad;
    const auto numeric = finite_diff_grad(spec, w, batch, 1e-6);
    r.worst = std::max(r.worst, relative_error(analytic, numeric));
    ++r.draws;
  }
  return r;
}

}  // namespace localsgd::gradcheck
