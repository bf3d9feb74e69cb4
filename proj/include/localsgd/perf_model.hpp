// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

namespace localsgd {

/// Training phase of one iteration: gradient all-reduce every step, or local
/// steps with a weight all-reduce every H steps.
enum class Phase { sync, local };

std::string to_string(Phase phase);

/// Parameters that turn protocol events into simulated seconds.
///
/// The defaults describe nodes of 8 workers on a 10 Gb/s interconnect
/// training a ~25.6M parameter fp32 model with per-worker batch 32. They put
/// H=1 multi-node runs in the communication-bound regime and single-node runs
/// in the compute-bound one. Absolute values are not measurements.
struct CommCostModel {
  double intra_node_bandwidth = 2.0e10;  // bytes/s
  double inter_node_bandwidth = 1.25e9;  // bytes/s, 10 Gb/s
  double link_latency = 5.0e-5;          // s per ring hop
  std::int64_t workers_per_node = 8;
  double data_per_sample = 4.0e-4;       // s
  double forward_per_sample = 1.2e-3;    // s
  double backward_per_sample = 2.4e-3;   // s
  double update_per_sample = 1.0e-4;     // s
  double model_bytes = 102.4e6;

  void validate() const;
};

struct TimeBreakdown {
  double data = 0.0;
  double forward = 0.0;
  double backward = 0.0;
  double update = 0.0;
  double communication = 0.0;

  double compute() const { return data + forward + backward + update; }
  double total() const { return compute() + communication; }
};

/// Ring all-reduce: 2 (K-1)/K * bytes / bandwidth + 2 (K-1) * latency, using
/// the inter-node bandwidth once K exceeds one node. Zero for K = 1.
double allreduce_time(std::int64_t workers, const CommCostModel& model);

/// Per-iteration times. Compute parts scale with the per-worker batch; the
/// all-reduce is paid every step in the sync phase and amortised over H
/// steps in the local phase.
TimeBreakdown iteration_breakdown(std::int64_t workers, std::int64_t local_steps, std::int64_t batch,
                                  Phase phase, const CommCostModel& model);

/// The parts of a training plan the timing model needs.
struct PerfPlan {
  std::int64_t workers = 1;
  std::int64_t batch = 32;
  std::int64_t local_steps = 1;
  std::int64_t iters_per_epoch = 1;
  std::int64_t epochs = 1;
  std::int64_t switch_epoch = 0;  // epochs before this run in the sync phase
};

struct EpochTiming {
  double epoch_time = 0.0;          // mean over the run's epochs, s
  double normalized_speedup = 1.0;  // epoch_time(H=1) / epoch_time(H), same K
  double total_time = 0.0;          // epochs * epoch_time, s
};

EpochTiming epoch_time_and_speedup(const PerfPlan& plan, const CommCostModel& model);

}  // namespace localsgd
