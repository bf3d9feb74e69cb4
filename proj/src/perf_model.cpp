// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "localsgd/perf_model.hpp"

#include <algorithm>

#include "localsgd/error.hpp"

namespace localsgd {

std::string to_string(Phase phase) { return phase == Phase::sync ? "sync" : "local"; }

void CommCostModel::validate() const {
  if (!(intra_node_bandwidth > 0.0)) throw ConfigError("perf.intra_bw: must be > 0");
  if (!(inter_node_bandwidth > 0.0)) throw ConfigError("perf.inter_bw: must be > 0");
  if (!(link_latency >= 0.0)) throw ConfigError("perf.latency: must be >= 0");
  if (workers_per_node < 1) throw ConfigError("perf.workers_per_node: must be >= 1");
  if (!(data_per_sample >= 0.0)) throw ConfigError("perf.data_s: must be >= 0");
  if (!(forward_per_sample >= 0.0)) throw ConfigError("perf.forward_s: must be >= 0");
  if (!(backward_per_sample >= 0.0)) throw ConfigError("perf.backward_s: must be >= 0");
  if (!(update_per_sample >= 0.0)) throw ConfigError("perf.update_s: must be >= 0");
  if (!(model_bytes >= 0.0)) throw ConfigError("perf.model_bytes: must be >= 0");
}

double allreduce_time(std::int64_t workers, const CommCostModel& model) {
  if (workers < 1) throw ContractError("allreduce_time: K must be >= 1");
  if (workers == 1) return 0.0;
  const double k = static_cast<double>(workers);
  const double bandwidth =
      workers <= model.workers_per_node ? model.intra_node_bandwidth : model.inter_node_bandwidth;
  return 2.0 * (k - 1.0) / k * (model.model_bytes / bandwidth) + 2.0 * (k - 1.0) * model.link_latency;
}

TimeBreakdown iteration_breakdown(std::int64_t workers, std::int64_t local_steps, std::int64_t batch,
                                  Phase phase, const CommCostModel& model) {
  if (local_steps < 1) throw ContractError("iteration_breakdown: H must be >= 1");
  if (batch < 1) throw ContractError("iteration_breakdown: B must be >= 1");
  const double b = static_cast<double>(batch);
  TimeBreakdown t;
  t.data = model.data_per_sample * b;
  t.forward = model.forward_per_sample * b;
  t.backward = model.backward_per_sample * b;
  t.update = model.update_per_sample * b;
  const double h = phase == Phase::sync ? 1.0 : static_cast<double>(local_steps);
  t.communication = allreduce_time(workers, model) / h;
  return t;
}

namespace {

double mean_epoch_time(const PerfPlan& plan, std::int64_t local_steps, const CommCostModel& model) {
  const std::int64_t sync_epochs = std::clamp<std::int64_t>(plan.switch_epoch, 0, plan.epochs);
  const std::int64_t local_epochs = plan.epochs - sync_epochs;
  const double s = static_cast<double>(plan.iters_per_epoch);
  const double sync_iter =
      iteration_breakdown(plan.workers, local_steps, plan.batch, Phase::sync, model).total();
  const double local_iter =
      iteration_breakdown(plan.workers, local_steps, plan.batch, Phase::local, model).total();
  return s * (static_cast<double>(sync_epochs) * sync_iter + static_cast<double>(local_epochs) * local_iter) /
         static_cast<double>(plan.epochs);
}

}  // namespace

EpochTiming epoch_time_and_speedup(const PerfPlan& plan, const CommCostModel& model) {
  if (plan.workers < 1 || plan.batch < 1 || plan.local_steps < 1 || plan.iters_per_epoch < 1 ||
      plan.epochs < 1) {
    throw ContractError("epoch_time_and_speedup: K, B, H, S and E must be >= 1");
  }
  EpochTiming out;
  out.epoch_time = mean_epoch_time(plan, plan.local_steps, model);
  out.normalized_speedup = plan.local_steps == 1 ? 1.0 : mean_epoch_time(plan, 1, model) / out.epoch_time;
  out.total_time = static_cast<double>(plan.epochs) * out.epoch_time;
  return out;
}

}  // namespace localsgd
