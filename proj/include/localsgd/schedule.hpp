// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace localsgd {

enum class ScheduleKind { step, half_cosine };

std::string to_string(ScheduleKind kind);
ScheduleKind parse_schedule_kind(const std::string& text);

struct ScheduleSpec {
  double base_lr = 0.1;                 // eta, reached at the end of warm-up
  ScheduleKind kind = ScheduleKind::step;
  std::vector<std::int64_t> decay_epochs;  // step kind: lr is divided at the start of each listed epoch
  double decay_factor = 0.1;
  std::int64_t warmup_epochs = 0;
  double warmup_start = 0.1;
  std::int64_t total_epochs = 1;        // T_max
  std::int64_t iters_per_epoch = 1;     // S

  /// Throws ConfigError naming the offending field.
  void validate() const;
  std::int64_t total_steps() const { return total_epochs * iters_per_epoch; }
};

/// eta = K * B * 0.1 / 256.
double linear_scaling_lr(std::int64_t workers, std::int64_t batch_size);

/// Learning rate for 0-based global step t.
///
/// Warm-up (t < W*S) interpolates per iteration from warmup_start to eta.
/// Afterwards the schedule is evaluated at epoch granularity with the epoch
/// counted from 0, so for the half-cosine kind the first post-warm-up value
/// is eta * (1 + cos(pi * W / T_max)) / 2, not eta.
double lr_at(const ScheduleSpec& spec, std::int64_t t);

/// Ratio applied to momentum buffers when the learning rate changes.
double momentum_correction_factor(double lr_prev, double lr_new);

}  // namespace localsgd
