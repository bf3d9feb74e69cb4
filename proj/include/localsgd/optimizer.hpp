// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "localsgd/parameter_vector.hpp"

namespace localsgd {

enum class OptimizerKind { nesterov_sgd, lars };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& text);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::nesterov_sgd;
  double momentum = 0.9;
  double weight_decay = 0.0;  // only enters the LARS trust ratio; the gradient already carries lambda*w
  double lars_trust = 0.02;
  double lars_epsilon = 1e-8;
  bool lars_clip = true;
  /// Rescale momentum buffers by lr_new / lr_prev whenever the lr changes.
  bool momentum_correction = true;

  void validate() const;
};

/// v' = beta v + g;  w' = w - lr (beta v' + g).  Updates w and v in place.
void nesterov_step(ParameterVector& w, ParameterVector& v, const ParameterVector& g, double lr,
                   double momentum);

/// Trust ratio for one segment: tc |w| / (|g| + lambda |w| + eps), capped at
/// 1 when clipping. Falls back to 1 when either norm is zero.
double lars_local_lr(double weight_norm, double grad_norm, const OptimizerConfig& config);

/// Scales each segment's gradient by its trust ratio, then takes a Nesterov
/// step with the scaled gradient.
void lars_step(ParameterVector& w, ParameterVector& v, const ParameterVector& g, double lr,
               const OptimizerConfig& config);

/// Dispatches on config.kind.
void optimizer_step(ParameterVector& w, ParameterVector& v, const ParameterVector& g, double lr,
                    const OptimizerConfig& config);

/// Outer momentum applied to each weight average. `anchor` is the model that
/// was broadcast at the previous synchronization.
struct SlowMoConfig {
  bool enabled = false;
  double lr = 1.0;        // alpha
  double momentum = 0.5;  // beta_slow
  std::optional<ParameterVector> buffer;  // u
  std::optional<ParameterVector> anchor;  // x

  void validate() const;
  /// Sets the anchor and zeroes the buffer.
  void reset(const ParameterVector& model);
};

/// delta = x - w_avg;  u' = beta u + delta;  x' = x - alpha u'.
/// Updates cfg.buffer and cfg.anchor and returns x'.
ParameterVector slowmo_update(SlowMoConfig& cfg, const ParameterVector& w_avg);

}  // namespace localsgd
