// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "localsgd/dataset.hpp"
#include "localsgd/error.hpp"
#include "localsgd/metrics.hpp"
#include "localsgd/model.hpp"
#include "localsgd/optimizer.hpp"
#include "localsgd/parameter_vector.hpp"
#include "localsgd/perf_model.hpp"
#include "localsgd/schedule.hpp"

namespace localsgd {

/// Full description of one training run.
///
/// Epochs before `switch_epoch` run synchronous minibatch SGD (gradient
/// all-reduce, one shared optimizer step); from `switch_epoch` on, workers
/// step locally and average weights whenever the global step count is a
/// multiple of H. switch_epoch = 0 is pure local SGD, switch_epoch >= epochs is
/// pure minibatch SGD.
struct TrainingPlan {
  std::int64_t workers = 1;      // K
  std::int64_t batch_size = 32;  // B, per worker
  std::int64_t local_steps = 1;  // H
  std::int64_t switch_epoch = 0; // T
  std::int64_t epochs = 1;       // E
  /// base_lr, kind, decays and warm-up are taken from here; total_epochs and
  /// iters_per_epoch are overwritten from the plan and the data.
  ScheduleSpec schedule;
  OptimizerConfig optimizer;
  SlowMoConfig slowmo;
  std::uint64_t seed = 0;
  ModelSpec model;
  DataSource train_data = SyntheticBlobsSource{};
  std::optional<DataSource> val_data;  // defaults to the training set

  void validate() const;
};

enum class Execution { sequential, parallel };

struct WorkerState {
  std::size_t index = 1;  // k, 1-based
  ParameterVector weights;
  ParameterVector momentum;
};

/// Snapshot handed to a StepObserver after every global step.
struct StepView {
  std::int64_t step = 0;  // 1-based global step just completed
  std::int64_t epoch = 0; // 0-based
  Phase phase = Phase::sync;
  double lr = 0.0;
  bool synchronized = false;  // a weight or gradient all-reduce happened this step
  std::span<const WorkerState> workers;
};

using StepObserver = std::function<void(const StepView&)>;

struct RunOptions {
  Execution execution = Execution::sequential;
  std::string run_id = "run";
  StepObserver observer;
};

struct FinalReport {
  ParameterVector model;  // averaged model at the end of training
  EvalResult validation;
  double final_train_loss = 0.0;
  std::int64_t iters_per_epoch = 0;
  std::int64_t steps_per_worker = 0;
  std::int64_t allreduces = 0;
};

/// Raised when a loss, gradient or weight becomes non-finite. Records written
/// before the failure stay in the sink.
class TrainingDiverged : public NumericError {
 public:
  TrainingDiverged(const std::string& what, std::int64_t epoch, std::int64_t step)
      : NumericError(what), epoch(epoch), step(step) {}
  std::int64_t epoch;
  std::int64_t step;
};

/// Coordinate-wise mean, summed as a pairwise tree over ascending index so
/// the result does not depend on how the work was scheduled.
ParameterVector pairwise_mean(std::span<const ParameterVector* const> items);

/// Averages the workers' weights and writes the mean back to every worker.
ParameterVector synchronize_weights(std::span<WorkerState> states);

ParameterVector allreduce_gradients(std::span<const ParameterVector> grads);

/// Validation of the averaged model; the workers are not modified.
EvalResult evaluate(const ModelSpec& spec, std::span<const WorkerState> states, const Dataset& valset);

FinalReport run(const TrainingPlan& plan, const Dataset& train, const Dataset& val, MetricsSink& sink,
                const RunOptions& options = {});

/// Loads plan.train_data / plan.val_data and runs.
FinalReport run(const TrainingPlan& plan, MetricsSink& sink, const RunOptions& options = {});

}  // namespace localsgd
