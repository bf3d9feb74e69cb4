// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "localsgd/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "localsgd/error.hpp"
#include "localsgd/rng.hpp"

namespace localsgd {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::quadratic: return "quadratic";
    case ModelKind::linear_regression: return "linear-regression";
    case ModelKind::logistic_regression: return "logistic-regression";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

ModelKind parse_model_kind(const std::string& text) {
  if (text == "quadratic") return ModelKind::quadratic;
  if (text == "linear-regression") return ModelKind::linear_regression;
  if (text == "logistic-regression") return ModelKind::logistic_regression;
  if (text == "mlp") return ModelKind::mlp;
  throw ConfigError("model.kind: unknown model kind `" + text + "`");
}

ModelSpec ModelSpec::quadratic(std::vector<double> curvature, std::vector<double> target,
                               double weight_decay) {
  ModelSpec spec;
  spec.kind = ModelKind::quadratic;
  spec.layer_sizes = {target.size()};
  spec.curvature = std::move(curvature);
  spec.target = std::move(target);
  spec.weight_decay = weight_decay;
  spec.validate();
  return spec;
}

ModelSpec ModelSpec::quadratic_diagonal(const std::vector<double>& diagonal,
                                        std::vector<double> target, double weight_decay) {
  const std::size_t d = diagonal.size();
  std::vector<double> a(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) a[i * d + i] = diagonal[i];
  return quadratic(std::move(a), std::move(target), weight_decay);
}

bool ModelSpec::is_classifier() const {
  return kind == ModelKind::logistic_regression || kind == ModelKind::mlp ||
         (kind == ModelKind::linear_regression && output_dim() > 1);
}

void ModelSpec::validate() const {
  if (!(weight_decay >= 0.0) || !std::isfinite(weight_decay)) {
    throw ConfigError("model.weight_decay: must be a finite value >= 0");
  }
  if (layer_sizes.empty()) throw ConfigError("model.layers: empty layer list");
  for (std::size_t s : layer_sizes) {
    if (s == 0) throw ConfigError("model.layers: layer sizes must be positive");
  }
  switch (kind) {
    case ModelKind::quadratic: {
      if (layer_sizes.size() != 1) throw ConfigError("model.layers: quadratic takes a single dimension");
      const std::size_t d = layer_sizes[0];
      if (target.size() != d) throw ConfigError("model.target: expected " + std::to_string(d) + " values");
      if (curvature.size() != d * d) {
        throw ConfigError("model.curvature: expected a " + std::to_string(d) + "x" + std::to_string(d) + " matrix");
      }
      // Symmetry, then Cholesky for positive definiteness.
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < i; ++j) {
          const double a = curvature[i * d + j];
          const double b = curvature[j * d + i];
          if (std::abs(a - b) > 1e-12 * std::max({1.0, std::abs(a), std::abs(b)})) {
            throw ConfigError("model.curvature: matrix is not symmetric");
          }
        }
      }
      std::vector<double> l(d * d, 0.0);
      for (std::size_t j = 0; j < d; ++j) {
        double diag = curvature[j * d + j];
        for (std::size_t k = 0; k < j; ++k) diag -= l[j * d + k] * l[j * d + k];
        if (!(diag > 0.0)) throw ConfigError("model.curvature: matrix is not positive definite");
        l[j * d + j] = std::sqrt(diag);
        for (std::size_t i = j + 1; i < d; ++i) {
          double v = curvature[i * d + j];
          for (std::size_t k = 0; k < j; ++k) v -= l[i * d + k] * l[j * d + k];
          l[i * d + j] = v / l[j * d + j];
        }
      }
      break;
    }
    case ModelKind::linear_regression:
    case ModelKind::logistic_regression:
      if (layer_sizes.size() != 2) throw ConfigError("model.layers: expected {inputs, outputs}");
      if (kind == ModelKind::logistic_regression && layer_sizes[1] < 2) {
        throw ConfigError("model.layers: logistic regression needs at least 2 classes");
      }
      break;
    case ModelKind::mlp:
      if (layer_sizes.size() < 3) throw ConfigError("model.layers: mlp needs inputs, >=1 hidden layer, outputs");
      if (layer_sizes.back() < 2) throw ConfigError("model.layers: mlp needs at least 2 classes");
      break;
  }
}

std::shared_ptr<const Layout> make_layout(const ModelSpec& spec) {
  if (spec.kind == ModelKind::quadratic) return Layout::make({{"w", spec.layer_sizes.at(0)}});
  std::vector<std::pair<std::string, std::size_t>> parts;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const std::size_t in = spec.layer_sizes[l];
    const std::size_t out = spec.layer_sizes[l + 1];
    parts.emplace_back("layer" + std::to_string(l) + ".weight", in * out);
    parts.emplace_back("layer" + std::to_string(l) + ".bias", out);
  }
  return Layout::make(parts);
}

std::size_t parameter_count(const ModelSpec& spec) {
  if (spec.kind == ModelKind::quadratic) return spec.layer_sizes.at(0);
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    n += (spec.layer_sizes[l] + 1) * spec.layer_sizes[l + 1];
  }
  return n;
}

ParameterVector init_weights(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  ParameterVector w(make_layout(spec), 0.0);
  if (spec.kind != ModelKind::mlp) return w;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
    const double fan_in = static_cast<double>(spec.layer_sizes[l]);
    const double stddev = std::sqrt(2.0 / fan_in);
    Rng rng(derive_seed(seed, {0x494Eu /* "IN" */, l}));
    for (double& v : w.segment(2 * l)) v = rng.normal(0.0, stddev);
  }
  return w;
}

namespace {

struct Accumulated {
  double data_loss_sum = 0.0;
  std::size_t correct = 0;
};

void check_batch(const ModelSpec& spec, const ParameterVector& w, const MiniBatch& batch) {
  if (batch.data == nullptr || batch.empty()) throw ContractError("loss_and_grad: empty batch");
  const std::size_t expected = parameter_count(spec);
  if (w.size() != expected) {
    throw ShapeError("loss_and_grad: weight vector has " + std::to_string(w.size()) +
                     " entries, model expects " + std::to_string(expected));
  }
  if (batch.data->dim() != spec.input_dim()) {
    throw ShapeError("loss_and_grad: data dimension " + std::to_string(batch.data->dim()) +
                     " does not match model input " + std::to_string(spec.input_dim()));
  }
  if (spec.is_classifier() && static_cast<std::size_t>(batch.data->num_classes()) > spec.output_dim()) {
    throw ShapeError("loss_and_grad: dataset has " + std::to_string(batch.data->num_classes()) +
                     " classes, model outputs " + std::to_string(spec.output_dim()));
  }
}

std::size_t argmax(const std::vector<double>& z) {
  return static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
}

Accumulated quadratic_pass(const ModelSpec& spec, std::span<const double> w, const MiniBatch& batch,
                           std::span<double> grad) {
  const std::size_t d = spec.layer_sizes[0];
  const auto& a = spec.curvature;
  Accumulated acc;
  std::vector<double> diff(d), ad(d);
  for (std::size_t idx : batch.indices) {
    const auto x = batch.data->features(idx);
    for (std::size_t i = 0; i < d; ++i) diff[i] = w[i] - (spec.target[i] + x[i]);
    double q = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < d; ++j) s += a[i * d + j] * diff[j];
      ad[i] = s;
      q += diff[i] * s;
    }
    acc.data_loss_sum += 0.5 * q;
    if (!grad.empty()) {
      for (std::size_t i = 0; i < d; ++i) grad[i] += ad[i];
    }
  }
  return acc;
}

// Affine stack: hidden layers use ReLU, the last layer emits raw outputs.
Accumulated network_pass(const ModelSpec& spec, const ParameterVector& w, const MiniBatch& batch,
                         std::span<double> grad) {
  const auto& sizes = spec.layer_sizes;
  const std::size_t layers = sizes.size() - 1;
  const bool softmax_head = spec.kind != ModelKind::linear_regression;
  const auto& segs = w.layout().segments();

  std::vector<std::vector<double>> act(layers + 1);  // act[0] = input, act[l+1] = output of layer l
  std::vector<std::vector<double>> pre(layers);
  for (std::size_t l = 0; l < layers; ++l) {
    act[l + 1].resize(sizes[l + 1]);
    pre[l].resize(sizes[l + 1]);
  }
  std::vector<double> delta, next_delta;

  Accumulated acc;
  for (std::size_t idx : batch.indices) {
    const auto x = batch.data->features(idx);
    act[0].assign(x.begin(), x.end());
    for (std::size_t l = 0; l < layers; ++l) {
      const std::size_t in = sizes[l];
      const std::size_t out = sizes[l + 1];
      const double* wt = w.values().data() + segs[2 * l].offset;
      const double* b = w.values().data() + segs[2 * l + 1].offset;
      for (std::size_t o = 0; o < out; ++o) {
        double z = b[o];
        const double* row = wt + o * in;
        for (std::size_t i = 0; i < in; ++i) z += row[i] * act[l][i];
        pre[l][o] = z;
        act[l + 1][o] = (l + 1 < layers) ? std::max(z, 0.0) : z;
      }
    }

    const std::vector<double>& z = act[layers];
    const int y = batch.data->label(idx);
    delta.assign(z.size(), 0.0);
    if (softmax_head) {
      const double zmax = *std::max_element(z.begin(), z.end());
      double sum = 0.0;
      for (double v : z) sum += std::exp(v - zmax);
      const double lse = zmax + std::log(sum);
      acc.data_loss_sum += lse - z[y];
      for (std::size_t o = 0; o < z.size(); ++o) delta[o] = std::exp(z[o] - lse);
      delta[y] -= 1.0;
    } else {
      double loss = 0.0;
      for (std::size_t o = 0; o < z.size(); ++o) {
        const double t = z.size() > 1 ? (static_cast<int>(o) == y ? 1.0 : 0.0) : static_cast<double>(y);
        delta[o] = z[o] - t;
        loss += delta[o] * delta[o];
      }
      acc.data_loss_sum += 0.5 * loss;
    }
    if (spec.is_classifier() && argmax(z) == static_cast<std::size_t>(y)) ++acc.correct;

    if (grad.empty()) continue;
    for (std::size_t l = layers; l-- > 0;) {
      const std::size_t in = sizes[l];
      const std::size_t out = sizes[l + 1];
      double* gw = grad.data() + segs[2 * l].offset;
      double* gb = grad.data() + segs[2 * l + 1].offset;
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        gb[o] += d;
        double* grow = gw + o * in;
        for (std::size_t i = 0; i < in; ++i) grow[i] += d * act[l][i];
      }
      if (l == 0) break;
      const double* wt = w.values().data() + segs[2 * l].offset;
      next_delta.assign(in, 0.0);
      for (std::size_t o = 0; o < out; ++o) {
        const double d = delta[o];
        const double* row = wt + o * in;
        for (std::size_t i = 0; i < in; ++i) next_delta[i] += row[i] * d;
      }
      for (std::size_t i = 0; i < in; ++i) {
        if (pre[l - 1][i] <= 0.0) next_delta[i] = 0.0;
      }
      delta.swap(next_delta);
    }
  }
  return acc;
}

Accumulated forward_backward(const ModelSpec& spec, const ParameterVector& w, const MiniBatch& batch,
                             std::span<double> grad) {
  if (spec.kind == ModelKind::quadratic) return quadratic_pass(spec, w.values(), batch, grad);
  return network_pass(spec, w, batch, grad);
}

double regularizer(const ModelSpec& spec, const ParameterVector& w) {
  if (spec.weight_decay == 0.0) return 0.0;
  double sq = 0.0;
  for (double v : w.values()) sq += v * v;
  return 0.5 * spec.weight_decay * sq;
}

}  // namespace

LossGrad loss_and_grad(const ModelSpec& spec, const ParameterVector& w, const MiniBatch& batch) {
  check_batch(spec, w, batch);
  LossGrad out;
  out.grad = ParameterVector(w.layout_ptr(), 0.0);
  const Accumulated acc = forward_backward(spec, w, batch, out.grad.values());
  const double n = static_cast<double>(batch.size());
  for (double& g : out.grad.values()) g /= n;
  if (spec.weight_decay != 0.0) {
    for (std::size_t i = 0; i < w.size(); ++i) out.grad[i] += spec.weight_decay * w[i];
  }
  out.loss = acc.data_loss_sum / n + regularizer(spec, w);
  out.correct = acc.correct;
  if (!std::isfinite(out.loss) || !out.grad.all_finite()) {
    throw NumericError("loss_and_grad: non-finite loss or gradient");
  }
  return out;
}

double loss_value(const ModelSpec& spec, const ParameterVector& w, const MiniBatch& batch) {
  check_batch(spec, w, batch);
  const Accumulated acc = forward_backward(spec, w, batch, {});
  const double loss = acc.data_loss_sum / static_cast<double>(batch.size()) + regularizer(spec, w);
  if (!std::isfinite(loss)) throw NumericError("loss_value: non-finite loss");
  return loss;
}

ParameterVector finite_diff_grad(const ModelSpec& spec, const ParameterVector& w,
                                 const MiniBatch& batch, double step) {
  if (!(step > 0.0)) throw ContractError("finite_diff_grad: step must be > 0");
  ParameterVector probe = w;
  ParameterVector grad(w.layout_ptr(), 0.0);
  for (std::size_t i = 0; i < w.size(); ++i) {
    probe[i] = w[i] + step;
    const double up = loss_value(spec, probe, batch);
    probe[i] = w[i] - step;
    const double down = loss_value(spec, probe, batch);
    probe[i] = w[i];
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

EvalResult evaluate_model(const ModelSpec& spec, const ParameterVector& w, const Dataset& ds) {
  const MiniBatch all = full_batch(ds);
  check_batch(spec, w, all);
  const Accumulated acc = forward_backward(spec, w, all, {});
  const double n = static_cast<double>(ds.size());
  EvalResult r;
  r.loss = acc.data_loss_sum / n;
  r.top1 = spec.is_classifier() ? static_cast<double>(acc.correct) / n
                                : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace localsgd
