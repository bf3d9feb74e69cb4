// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "localsgd/engine.hpp"

#include <tbb/parallel_for.h>

#include <algorithm>
#include <cmath>

#include "localsgd/error.hpp"

namespace localsgd {

void TrainingPlan::validate() const {
  if (workers < 1) throw ConfigError("plan.workers: K must be ≥ 1");
  if (batch_size < 1) throw ConfigError("plan.batch_size: B must be ≥ 1");
  if (local_steps < 1) throw ConfigError("plan.local_steps: H must be ≥ 1");
  if (epochs < 1) throw ConfigError("plan.epochs: E must be ≥ 1");
  if (switch_epoch < 0) throw ConfigError("plan.switch_epoch: T must be ≥ 0");
  model.validate();
  optimizer.validate();
  if (slowmo.enabled) slowmo.validate();
}

namespace {

void pairwise_sum(std::span<const ParameterVector* const> items, std::span<double> out) {
  if (items.size() == 1) {
    const auto src = items[0]->values();
    std::copy(src.begin(), src.end(), out.begin());
    return;
  }
  const std::size_t half = items.size() / 2;
  pairwise_sum(items.first(half), out);
  std::vector<double> right(out.size());
  pairwise_sum(items.subspan(half), right);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += right[i];
}

template <typename Fn>
void for_each_worker(Execution execution, std::size_t count, Fn&& fn) {
  if (execution == Execution::parallel && count > 1) {
    tbb::parallel_for(std::size_t{0}, count, [&](std::size_t k) { fn(k); });
  } else {
    for (std::size_t k = 0; k < count; ++k) fn(k);
  }
}

}  // namespace

ParameterVector pairwise_mean(std::span<const ParameterVector* const> items) {
  if (items.empty()) throw ContractError("pairwise_mean: nothing to average");
  for (const auto* item : items) items[0]->require_same_layout(*item, "pairwise_mean");
  ParameterVector out(items[0]->layout_ptr(), 0.0);
  pairwise_sum(items, out.values());
  const double k = static_cast<double>(items.size());
  for (double& v : out.values()) v /= k;
  return out;
}

ParameterVector synchronize_weights(std::span<WorkerState> states) {
  std::vector<const ParameterVector*> ptrs;
  ptrs.reserve(states.size());
  for (const auto& s : states) ptrs.push_back(&s.weights);
  ParameterVector mean = pairwise_mean(ptrs);
  for (auto& s : states) s.weights = mean;
  return mean;
}

ParameterVector allreduce_gradients(std::span<const ParameterVector> grads) {
  std::vector<const ParameterVector*> ptrs;
  ptrs.reserve(grads.size());
  for (const auto& g : grads) ptrs.push_back(&g);
  return pairwise_mean(ptrs);
}

EvalResult evaluate(const ModelSpec& spec, std::span<const WorkerState> states, const Dataset& valset) {
  if (states.empty()) throw ContractError("evaluate: no workers");
  if (valset.size() == 0) throw ContractError("evaluate: empty validation set");
  std::vector<const ParameterVector*> ptrs;
  for (const auto& s : states) ptrs.push_back(&s.weights);
  const ParameterVector averaged = pairwise_mean(ptrs);
  return evaluate_model(spec, averaged, valset);
}

FinalReport run(const TrainingPlan& plan, const Dataset& train, const Dataset& val, MetricsSink& sink,
                const RunOptions& options) {
  plan.validate();
  const auto k_workers = static_cast<std::size_t>(plan.workers);
  const ShardGeometry geometry{train.size(), k_workers, static_cast<std::size_t>(plan.batch_size)};
  const auto iters = static_cast<std::int64_t>(geometry.full_iterations());
  if (iters == 0) {
    throw ConfigError("plan: dataset of " + std::to_string(train.size()) +
                      " examples leaves some worker without a full batch (K=" +
                      std::to_string(plan.workers) + ", B=" + std::to_string(plan.batch_size) + ")");
  }

  ScheduleSpec schedule = plan.schedule;
  schedule.total_epochs = plan.epochs;
  schedule.iters_per_epoch = iters;
  schedule.validate();

  const ParameterVector w0 = init_weights(plan.model, plan.seed);
  std::vector<WorkerState> workers(k_workers);
  for (std::size_t k = 0; k < k_workers; ++k) {
    workers[k] = WorkerState{k + 1, w0, ParameterVector(w0.layout_ptr(), 0.0)};
  }
  SlowMoConfig slowmo = plan.slowmo;

  std::vector<LossGrad> results(k_workers);
  std::vector<ParameterVector> grads(k_workers);
  std::optional<double> prev_lr;
  std::int64_t t = 0;
  std::int64_t total_allreduces = 0;
  const bool classifier = plan.model.is_classifier();
  FinalReport report;
  report.iters_per_epoch = iters;

  auto diverged = [&](const std::string& why, std::int64_t epoch) {
    return TrainingDiverged("training diverged at epoch " + std::to_string(epoch + 1) + ", step " +
                                std::to_string(t + 1) + ": " + why,
                            epoch + 1, t + 1);
  };

  auto sync_weights = [&]() {
    ParameterVector mean = synchronize_weights(workers);
    if (slowmo.enabled) {
      const ParameterVector outer = slowmo_update(slowmo, mean);
      for (auto& w : workers) w.weights = outer;
    }
  };

  for (std::int64_t epoch = 0; epoch < plan.epochs; ++epoch) {
    const auto perm = shuffle_epoch(train, epoch, plan.seed);
    const Phase phase = epoch < plan.switch_epoch ? Phase::sync : Phase::local;
    if (phase == Phase::local && slowmo.enabled && !slowmo.anchor) slowmo.reset(workers[0].weights);

    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::int64_t allreduces = 0;
    double lr = 0.0;
    bool synced_last = true;

    for (std::int64_t m = 1; m <= iters; ++m) {
      lr = lr_at(schedule, t);
      if (prev_lr && lr != *prev_lr && plan.optimizer.momentum_correction) {
        const double factor = momentum_correction_factor(*prev_lr, lr);
        for (auto& w : workers) {
          for (double& v : w.momentum.values()) v *= factor;
        }
      }

      try {
        for_each_worker(options.execution, k_workers, [&](std::size_t k) {
          const MiniBatch batch = minibatch(train, perm, geometry, k + 1, static_cast<std::size_t>(m));
          results[k] = loss_and_grad(plan.model, workers[k].weights, batch);
        });
        for (std::size_t k = 0; k < k_workers; ++k) {
          loss_sum += results[k].loss;
          correct += results[k].correct;
        }

        if (phase == Phase::sync) {
          for (std::size_t k = 0; k < k_workers; ++k) grads[k] = std::move(results[k].grad);
          const ParameterVector g = allreduce_gradients(grads);
          optimizer_step(workers[0].weights, workers[0].momentum, g, lr, plan.optimizer);
          for (std::size_t k = 1; k < k_workers; ++k) {
            workers[k].weights = workers[0].weights;
            workers[k].momentum = workers[0].momentum;
          }
          ++allreduces;
          synced_last = true;
        } else {
          for_each_worker(options.execution, k_workers, [&](std::size_t k) {
            optimizer_step(workers[k].weights, workers[k].momentum, results[k].grad, lr, plan.optimizer);
          });
          synced_last = (t + 1) % plan.local_steps == 0;
          if (synced_last) {
            sync_weights();
            ++allreduces;
          }
        }
      } catch (const NumericError& e) {
        throw diverged(e.what(), epoch);
      }

      ++t;
      prev_lr = lr;
      if (options.observer) {
        options.observer(StepView{t, epoch, phase, lr, phase == Phase::sync || synced_last, workers});
      }
    }

    // The last window of the run is closed with a synchronization.
    if (epoch + 1 == plan.epochs && !synced_last) {
      sync_weights();
      ++allreduces;
    }
    total_allreduces += allreduces;

    const EvalResult v = evaluate(plan.model, workers, val);
    const double samples = static_cast<double>(iters) * static_cast<double>(k_workers) *
                           static_cast<double>(plan.batch_size);
    MetricsRecord rec;
    rec.run_id = options.run_id;
    rec.seed = plan.seed;
    rec.epoch = epoch + 1;
    rec.step = t;
    rec.lr = lr;
    rec.train_loss = loss_sum / static_cast<double>(iters * plan.workers);
    rec.train_top1 = classifier ? static_cast<double>(correct) / samples : std::nan("");
    rec.val_loss = v.loss;
    rec.val_top1 = v.top1;
    rec.phase = phase;
    rec.steps_in_epoch = iters;
    rec.allreduces_in_epoch = allreduces;
    if (!std::isfinite(rec.train_loss) || !std::isfinite(rec.val_loss)) {
      throw diverged("non-finite epoch loss", epoch);
    }
    sink.write(rec);
    report.final_train_loss = rec.train_loss;
    report.validation = v;
  }

  std::vector<const ParameterVector*> ptrs;
  for (const auto& w : workers) ptrs.push_back(&w.weights);
  report.model = pairwise_mean(ptrs);
  report.steps_per_worker = t;
  report.allreduces = total_allreduces;
  return report;
}

FinalReport run(const TrainingPlan& plan, MetricsSink& sink, const RunOptions& options) {
  const Dataset train = load_or_generate(plan.train_data);
  if (plan.val_data) {
    const Dataset val = load_or_generate(*plan.val_data);
    return run(plan, train, val, sink, options);
  }
  return run(plan, train, train, sink, options);
}

}  // namespace localsgd
