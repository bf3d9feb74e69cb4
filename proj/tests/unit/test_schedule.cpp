// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include "localsgd/error.hpp"
#include "localsgd/schedule.hpp"

using namespace localsgd;

namespace {

ScheduleSpec step90() {
  ScheduleSpec s;
  s.base_lr = 0.8;
  s.kind = ScheduleKind::step;
  s.decay_epochs = {30, 60, 80};
  s.total_epochs = 90;
  s.iters_per_epoch = 10;
  return s;
}

}  // namespace

TEST(LinearScaling, WorkedValues) {
  EXPECT_EQ(linear_scaling_lr(64, 32), 0.8);
  EXPECT_EQ(linear_scaling_lr(8, 32), 0.1);
  EXPECT_EQ(linear_scaling_lr(1, 256), 0.1);
}

TEST(StepDecay, DecadesAreExact) {
  const auto s = step90();
  EXPECT_EQ(lr_at(s, 0), 0.8);
  EXPECT_EQ(lr_at(s, 299), 0.8);
  EXPECT_EQ(lr_at(s, 300), 0.08);
  EXPECT_EQ(lr_at(s, 35 * 10), 0.08);
  EXPECT_EQ(lr_at(s, 65 * 10), 0.008);
  EXPECT_EQ(lr_at(s, 85 * 10), 0.0008);
}

TEST(HalfCosine, MidpointIsHalf) {
  ScheduleSpec s;
  s.base_lr = 0.8;
  s.kind = ScheduleKind::half_cosine;
  s.total_epochs = 90;
  s.iters_per_epoch = 7;
  EXPECT_EQ(lr_at(s, 45 * 7), 0.4);
  EXPECT_EQ(lr_at(s, 0), 0.8);
  EXPECT_LT(lr_at(s, 89 * 7), 0.001);
  for (std::int64_t t = 1; t < s.total_steps(); ++t) ASSERT_LE(lr_at(s, t), lr_at(s, t - 1));
}

TEST(Warmup, LinearFromStartToTarget) {
  ScheduleSpec s;
  s.base_lr = 0.8;
  s.warmup_epochs = 5;
  s.warmup_start = 0.1;
  s.total_epochs = 90;
  s.iters_per_epoch = 100;
  EXPECT_EQ(lr_at(s, 0), 0.1);
  EXPECT_DOUBLE_EQ(lr_at(s, 250), 0.45);
  EXPECT_EQ(lr_at(s, 500), 0.8);
  EXPECT_LT(lr_at(s, 499), 0.8);
}

TEST(Schedule, OutOfRangeStepIsAContractError) {
  const auto s = step90();
  EXPECT_THROW(lr_at(s, -1), ContractError);
  EXPECT_THROW(lr_at(s, s.total_steps()), ContractError);
}

TEST(Schedule, ValidateNamesField) {
  auto s = step90();
  s.decay_factor = 1.5;
  try {
    s.validate();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("decay_factor"), std::string::npos);
  }
  s = step90();
  s.base_lr = 0.0;
  EXPECT_THROW(s.validate(), ConfigError);
}

TEST(Schedule, KindNames) {
  EXPECT_EQ(parse_schedule_kind("half-cosine"), ScheduleKind::half_cosine);
  EXPECT_EQ(parse_schedule_kind(to_string(ScheduleKind::step)), ScheduleKind::step);
  EXPECT_THROW(parse_schedule_kind("poly"), ConfigError);
}

TEST(MomentumCorrection, Ratios) {
  EXPECT_EQ(momentum_correction_factor(0.3, 0.3), 1.0);
  EXPECT_DOUBLE_EQ(momentum_correction_factor(0.8, 0.08), 0.1);
  EXPECT_DOUBLE_EQ(momentum_correction_factor(0.1, 0.1014), 1.014);
  EXPECT_THROW(momentum_correction_factor(0.0, 0.1), ContractError);
}
