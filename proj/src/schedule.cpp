// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "localsgd/schedule.hpp"

#include <cmath>
#include <numbers>

#include "localsgd/error.hpp"

namespace localsgd {

std::string to_string(ScheduleKind kind) {
  return kind == ScheduleKind::step ? "step" : "half-cosine";
}

ScheduleKind parse_schedule_kind(const std::string& text) {
  if (text == "step") return ScheduleKind::step;
  if (text == "half-cosine" || text == "cosine") return ScheduleKind::half_cosine;
  throw ConfigError("schedule.kind: unknown schedule `" + text + "` (expected step or half-cosine)");
}

void ScheduleSpec::validate() const {
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw ConfigError("schedule.base_lr: must be > 0");
  if (total_epochs < 1) throw ConfigError("schedule: total epochs must be >= 1");
  if (iters_per_epoch < 1) throw ConfigError("schedule: iterations per epoch must be >= 1");
  if (warmup_epochs < 0) throw ConfigError("schedule.warmup_epochs: must be >= 0");
  if (warmup_epochs > 0 && !(warmup_start > 0.0 && warmup_start <= base_lr)) {
    throw ConfigError("schedule.warmup_start: must be in (0, base_lr]");
  }
  if (!(decay_factor > 0.0 && decay_factor <= 1.0)) throw ConfigError("schedule.decay_factor: must be in (0, 1]");
  for (std::size_t i = 0; i < decay_epochs.size(); ++i) {
    if (decay_epochs[i] < 1 || decay_epochs[i] >= total_epochs) {
      throw ConfigError("schedule.decay_epochs: every decay epoch must lie in [1, total epochs)");
    }
    if (i > 0 && decay_epochs[i] <= decay_epochs[i - 1]) {
      throw ConfigError("schedule.decay_epochs: must be strictly increasing");
    }
  }
}

double linear_scaling_lr(std::int64_t workers, std::int64_t batch_size) {
  if (workers < 1 || batch_size < 1) throw ContractError("linear_scaling_lr: K and B must be >= 1");
  // K * B * 0.1 / 256 as one rounding.
  return static_cast<double>(workers * batch_size) / 2560.0;
}

double lr_at(const ScheduleSpec& spec, std::int64_t t) {
  if (t < 0 || t >= spec.total_steps()) {
    throw ContractError("lr_at: step " + std::to_string(t) + " outside [0, " +
                        std::to_string(spec.total_steps()) + ")");
  }
  const std::int64_t warmup_steps = spec.warmup_epochs * spec.iters_per_epoch;
  if (t < warmup_steps) {
    const double frac = static_cast<double>(t) / static_cast<double>(warmup_steps);
    return spec.warmup_start + (spec.base_lr - spec.warmup_start) * frac;
  }
  const std::int64_t epoch = t / spec.iters_per_epoch;
  if (spec.kind == ScheduleKind::step) {
    int decays = 0;
    for (std::int64_t d : spec.decay_epochs) decays += epoch >= d ? 1 : 0;
    // Divide by 1/factor so that a factor of 0.1 gives exact decades.
    return spec.base_lr / std::pow(1.0 / spec.decay_factor, decays);
  }
  const double phase = std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(spec.total_epochs);
  return spec.base_lr * (1.0 + std::cos(phase)) / 2.0;
}

double momentum_correction_factor(double lr_prev, double lr_new) {
  if (!(lr_prev > 0.0)) throw ContractError("momentum_correction_factor: previous lr must be > 0");
  return lr_new / lr_prev;
}

}  // namespace localsgd
