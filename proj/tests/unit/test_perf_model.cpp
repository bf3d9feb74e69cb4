// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>

#include "localsgd/perf_model.hpp"

using namespace localsgd;

TEST(AllReduce, SingleWorkerIsFree) { EXPECT_EQ(allreduce_time(1, CommCostModel{}), 0.0); }

TEST(AllReduce, RingFormula) {
  CommCostModel m;
  m.model_bytes = 1e9;
  m.intra_node_bandwidth = 1.25e9;
  m.link_latency = 1e-4;
  EXPECT_DOUBLE_EQ(allreduce_time(4, m), 2.0 * 0.75 * 0.8 + 6e-4);
}

TEST(AllReduce, InterNodeBandwidthBeyondOneNode) {
  CommCostModel m;
  m.link_latency = 0.0;
  EXPECT_DOUBLE_EQ(allreduce_time(8, m), 2.0 * 7.0 / 8.0 * m.model_bytes / m.intra_node_bandwidth);
  EXPECT_DOUBLE_EQ(allreduce_time(16, m), 2.0 * 15.0 / 16.0 * m.model_bytes / m.inter_node_bandwidth);
}

TEST(AllReduce, BandwidthBoundAsymptote) {
  CommCostModel m;
  m.link_latency = 0.0;
  const double limit = 2.0 * m.model_bytes / m.inter_node_bandwidth;
  EXPECT_NEAR(allreduce_time(1 << 20, m), limit, limit * 1e-5);
  EXPECT_LT(allreduce_time(1 << 20, m), limit);
}

TEST(Breakdown, CommunicationAmortisedExactly) {
  const CommCostModel m;
  for (std::int64_t k : {2, 8, 16, 64}) {
    const double c1 = iteration_breakdown(k, 1, 32, Phase::local, m).communication;
    for (std::int64_t h : {2, 3, 4, 16}) {
      EXPECT_EQ(iteration_breakdown(k, h, 32, Phase::local, m).communication, c1 / static_cast<double>(h));
    }
  }
}

TEST(Breakdown, SyncPhaseCommunicatesEveryStep) {
  const CommCostModel m;
  EXPECT_EQ(iteration_breakdown(16, 8, 32, Phase::sync, m).communication, allreduce_time(16, m));
}

TEST(Breakdown, ComputeScalesWithBatch) {
  const CommCostModel m;
  const auto b = iteration_breakdown(8, 1, 32, Phase::sync, m);
  EXPECT_DOUBLE_EQ(b.forward, 32 * m.forward_per_sample);
  EXPECT_DOUBLE_EQ(b.compute(), 32 * (m.data_per_sample + m.forward_per_sample + m.backward_per_sample +
                                      m.update_per_sample));
}

TEST(Breakdown, DefaultRegimes) {
  const CommCostModel m;
  const auto big = iteration_breakdown(64, 1, 32, Phase::sync, m);
  EXPECT_GT(big.communication, big.compute());
  const auto node = iteration_breakdown(8, 1, 32, Phase::sync, m);
  EXPECT_LT(node.communication, 0.2 * node.compute());
}

TEST(Speedup, UnitAtH1) {
  const CommCostModel m;
  EXPECT_EQ(epoch_time_and_speedup(PerfPlan{16, 32, 1, 100, 10, 0}, m).normalized_speedup, 1.0);
}

TEST(Speedup, ClosedFormWhenCommEqualsCompute) {
  CommCostModel m;
  m.data_per_sample = m.forward_per_sample = m.update_per_sample = 0.0;
  m.backward_per_sample = 1.0;  // compute 1 s per sample, B = 1
  m.link_latency = 0.0;
  m.intra_node_bandwidth = m.model_bytes;  // K=2: 2*(1/2)*1 = 1 s
  const auto r = epoch_time_and_speedup(PerfPlan{2, 1, 4, 10, 5, 0}, m);
  EXPECT_DOUBLE_EQ(r.normalized_speedup, 1.6);
  EXPECT_DOUBLE_EQ(r.epoch_time, 10 * 1.25);
}

TEST(Speedup, MonotoneWithShrinkingGainsAndBounded) {
  const CommCostModel m;
  for (std::int64_t k : {2, 8, 16, 32, 64}) {
    const auto at = [&](std::int64_t h) { return epoch_time_and_speedup(PerfPlan{k, 32, h, 50, 4, 0}, m).normalized_speedup; };
    const auto b1 = iteration_breakdown(k, 1, 32, Phase::local, m);
    double prev = at(1), prev_gain = INFINITY;
    for (std::int64_t h = 2; h <= 256; h *= 2) {
      const double s = at(h);
      EXPECT_GE(s, prev);
      EXPECT_LE(s - prev, prev_gain);
      EXPECT_LE(s, b1.total() / b1.compute());
      prev_gain = s - prev;
      prev = s;
    }
  }
}

TEST(Speedup, PostLocalTimeWeighting) {
  const CommCostModel m;
  const auto pure_sync = epoch_time_and_speedup(PerfPlan{16, 32, 1, 10, 10, 0}, m);
  const auto pure_local = epoch_time_and_speedup(PerfPlan{16, 32, 8, 10, 10, 0}, m);
  const auto half = epoch_time_and_speedup(PerfPlan{16, 32, 8, 10, 10, 5}, m);
  EXPECT_DOUBLE_EQ(half.epoch_time, (pure_sync.epoch_time + pure_local.epoch_time) / 2.0);
  EXPECT_GT(half.normalized_speedup, 1.0);
  EXPECT_LT(half.normalized_speedup, pure_local.normalized_speedup);
}

TEST(Scaling, DoublingWorkersHalvesEpochTimeWithoutLatency) {
  CommCostModel m;
  m.link_latency = 0.0;
  for (std::int64_t k = 16; k <= 256; k *= 2) {
    const std::int64_t n = 1 << 20;
    const auto t1 = epoch_time_and_speedup(PerfPlan{k, 32, 1, n / (32 * k), 1, 0}, m).epoch_time;
    const auto t2 = epoch_time_and_speedup(PerfPlan{2 * k, 32, 1, n / (64 * k), 1, 0}, m).epoch_time;
    EXPECT_LE(t2 / t1, 0.5 + 1.0 / static_cast<double>(k));
  }
}
