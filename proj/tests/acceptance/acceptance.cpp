// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any fails. Usage: acceptance [--work-dir DIR] [--only NAME]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "gradient_check.hpp"
#include "localsgd/engine.hpp"
#include "localsgd/experiment.hpp"
#include "localsgd/trends.hpp"
#include "reference.hpp"

using namespace localsgd;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path g_work;
const fs::path g_source = LOCALSGD_SOURCE_DIR;

class NullSink : public MetricsSink {
 public:
  void write(const MetricsRecord&) override {}
};

using Snapshots = std::vector<std::vector<std::vector<double>>>;  // step -> worker -> weights

Snapshots engine_trace(const TrainingPlan& plan, const Dataset& ds, Execution execution = Execution::sequential) {
  Snapshots out;
  NullSink sink;
  RunOptions opts;
  opts.execution = execution;
  opts.observer = [&](const StepView& v) {
    std::vector<std::vector<double>> ws;
    for (const auto& w : v.workers) ws.emplace_back(w.weights.values().begin(), w.weights.values().end());
    out.push_back(std::move(ws));
  };
  run(plan, ds, ds, sink, opts);
  return out;
}

Snapshots reference_trace(const TrainingPlan& plan, const Dataset& ds) {
  reference::Protocol p;
  p.workers = static_cast<std::size_t>(plan.workers);
  p.batch = static_cast<std::size_t>(plan.batch_size);
  p.local_steps = plan.local_steps;
  p.switch_epoch = plan.switch_epoch;
  p.epochs = plan.epochs;
  p.momentum = plan.optimizer.momentum;
  p.momentum_correction = plan.optimizer.momentum_correction;
  p.slowmo = plan.slowmo.enabled;
  p.slowmo_lr = plan.slowmo.lr;
  p.slowmo_momentum = plan.slowmo.momentum;
  p.seed = plan.seed;
  p.schedule = plan.schedule;
  Snapshots out;
  reference::run(plan.model, ds, p, [&](std::int64_t, const std::vector<std::vector<double>>& w) { out.push_back(w); });
  return out;
}

// Largest per-coordinate gap over all steps and workers; infinity if the
// traces differ in shape.
double max_gap(const Snapshots& a, const Snapshots& b) {
  if (a.size() != b.size() || a.empty()) return INFINITY;
  double worst = 0.0;
  for (std::size_t s = 0; s < a.size(); ++s) {
    if (a[s].size() != b[s].size()) return INFINITY;
    for (std::size_t k = 0; k < a[s].size(); ++k)
      for (std::size_t i = 0; i < a[s][k].size(); ++i) worst = std::max(worst, std::abs(a[s][k][i] - b[s][k][i]));
  }
  return worst;
}

bool bitwise_equal(const Snapshots& a, const Snapshots& b) { return !a.empty() && a == b; }

// Worker 0 only, for comparing runs with different K.
Snapshots first_worker(Snapshots s) {
  for (auto& step : s) step.resize(1);
  return s;
}

TrainingPlan mlp_plan(std::int64_t workers, std::size_t n) {
  TrainingPlan p;
  p.model.kind = ModelKind::mlp;
  p.model.layer_sizes = {8, 16, 4};
  SyntheticBlobsSource src;
  src.n = n;
  src.dim = 8;
  src.classes = 4;
  src.clusters = 4;
  src.separation = 1.5;
  src.seed = 5;
  p.train_data = src;
  p.workers = workers;
  p.batch_size = 8;
  p.seed = 3;
  p.schedule.base_lr = 0.05;
  return p;
}

Outcome e1() {
  const auto start = std::chrono::steady_clock::now();
  // K=4, B=8, 1280 examples: 40 iterations per epoch, 5 epochs = 200 steps.
  TrainingPlan local = mlp_plan(4, 1280);
  local.epochs = 5;
  local.local_steps = 1;
  local.switch_epoch = 0;
  local.optimizer.momentum = 0.0;
  local.schedule.decay_epochs = {3};
  const Dataset ds = load_or_generate(local.train_data);
  TrainingPlan minibatch = local;
  minibatch.switch_epoch = local.epochs;

  const auto a = engine_trace(local, ds);
  const auto b = reference_trace(minibatch, ds);
  const double gap = max_gap(a, b);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {a.size() == 200 && gap <= 1e-12 && secs < 10.0,
          std::to_string(a.size()) + " steps, max per-step gap " + fmt("%.3g", gap) + ", " + fmt("%.2f", secs) + " s"};
}

Outcome e2() {
  std::string detail;
  bool ok = true;
  for (std::int64_t h : {1, 2, 8}) {
    TrainingPlan p = mlp_plan(1, 200);
    p.epochs = 3;
    p.local_steps = h;
    p.optimizer.momentum = 0.9;
    p.schedule.decay_epochs = {2};
    const Dataset ds = load_or_generate(p.train_data);
    TrainingPlan seq = p;
    seq.switch_epoch = p.epochs;
    const bool same = bitwise_equal(engine_trace(p, ds), reference_trace(seq, ds));
    ok = ok && same;
    detail += "H=" + std::to_string(h) + (same ? " identical; " : " differs; ");
  }
  return {ok, detail};
}

Outcome e3() {
  TrainingPlan plain = mlp_plan(4, 512);
  plain.epochs = 4;
  plain.local_steps = 4;
  plain.optimizer.momentum = 0.9;
  plain.schedule.decay_epochs = {2, 3};
  const Dataset ds = load_or_generate(plain.train_data);
  TrainingPlan slow = plain;
  slow.slowmo.enabled = true;
  slow.slowmo.lr = 1.0;
  slow.slowmo.momentum = 0.0;
  const auto a = engine_trace(plain, ds);
  const double gap = max_gap(a, engine_trace(slow, ds));
  return {gap <= 1e-12, std::to_string(a.size()) + " steps, max gap " + fmt("%.3g", gap)};
}

Outcome e4() {
  TrainingPlan p = mlp_plan(4, 512);
  p.epochs = 4;
  p.local_steps = 3;
  p.optimizer.momentum = 0.9;
  p.schedule.decay_epochs = {2};
  const Dataset ds = load_or_generate(p.train_data);

  TrainingPlan late = p;
  late.switch_epoch = p.epochs + 2;
  TrainingPlan ref_sync = p;
  ref_sync.switch_epoch = p.epochs;
  // The minibatch reference keeps one model; every engine worker must match it.
  const auto sync_engine = engine_trace(late, ds);
  bool sync_same = !sync_engine.empty();
  const auto sync_ref = reference_trace(ref_sync, ds);
  sync_same = sync_same && sync_engine == sync_ref;

  TrainingPlan local = p;
  local.switch_epoch = 0;
  const bool local_same = bitwise_equal(engine_trace(local, ds), reference_trace(local, ds));
  return {sync_same && local_same, std::string("T>=E vs minibatch ") + (sync_same ? "identical" : "differs") +
                                       ", T=0 vs local " + (local_same ? "identical" : "differs")};
}

Outcome gradient_oracle() {
  bool ok = true;
  std::string detail;
  std::uint64_t seed = 100;
  for (const auto& spec : gradcheck::gradient_check_models()) {
    const auto r = gradcheck::check_gradients(spec, 100, seed++);
    ok = ok && r.draws == 100 && r.worst < 1e-5;
    detail += to_string(spec.kind) + " " + fmt("%.2g", r.worst) + "; ";
  }
  return {ok, "worst relative error per model: " + detail};
}

Outcome convex_oracle() {
  const std::vector<double> a{1.0, 2.0, 0.5, 4.0};
  const std::vector<double> target{1.0, -2.0, 0.5, 3.0};
  TrainingPlan p;
  p.model = ModelSpec::quadratic_diagonal(a, target);
  SyntheticQuadraticSource src;
  src.n = 128;
  src.dim = a.size();
  src.noise = 0.0;
  p.train_data = src;
  p.workers = 4;
  p.batch_size = 4;
  p.local_steps = 4;
  p.epochs = 50;
  p.optimizer.momentum = 0.9;
  p.schedule.base_lr = 0.1;
  p.schedule.decay_epochs = {25, 40};
  p.schedule.decay_factor = 0.5;
  p.schedule.warmup_epochs = 2;
  p.schedule.warmup_start = 0.02;
  const Dataset ds = load_or_generate(p.train_data);
  const auto trace = engine_trace(p, ds);

  // Scalar Nesterov recursion per coordinate. With no noise every worker sees
  // the gradient a_i (w_i - w*_i), so averaging is the identity.
  ScheduleSpec s = p.schedule;
  s.total_epochs = p.epochs;
  s.iters_per_epoch = 128 / (4 * 4);
  double gap = 0.0;
  std::vector<double> w(a.size(), 0.0), v(a.size(), 0.0);
  double prev = 0.0;
  const auto steps = static_cast<std::size_t>(s.total_steps());
  for (std::size_t t = 0; t < steps && t < trace.size(); ++t) {
    const double lr = lr_at(s, static_cast<std::int64_t>(t));
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (t > 0 && lr != prev) v[i] *= lr / prev;
      const double g = a[i] * (w[i] - target[i]);
      v[i] = 0.9 * v[i] + g;
      w[i] -= lr * (0.9 * v[i] + g);
      for (const auto& worker : trace[t]) gap = std::max(gap, std::abs(worker[i] - w[i]));
    }
    prev = lr;
  }
  double dist2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = trace.back()[0][i] - target[i];
    dist2 += d * d;
  }
  const double dist = std::sqrt(dist2);
  return {trace.size() == steps && gap <= 1e-10 && dist < 1e-6,
          std::to_string(trace.size()) + " steps, trajectory gap " + fmt("%.3g", gap) + ", final |w-w*| " +
              fmt("%.3g", dist)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const fs::path cfg = g_source / "configs" / "trajectory.cfg";
  std::map<std::string, std::string> csv;
  for (const char* mode : {"sequential", "parallel"}) {
    const Execution e = std::string(mode) == "parallel" ? Execution::parallel : Execution::sequential;
    for (const char* rep : {"a", "b"}) {
      const fs::path dir = g_work / "determinism" / (std::string(mode) + "-" + rep);
      fs::remove_all(dir);
      csv[std::string(mode) + rep] = slurp(run_experiment(cfg, 42, dir, e).metrics_csv);
    }
  }
  const bool seq = !csv["sequentiala"].empty() && csv["sequentiala"] == csv["sequentialb"];
  const bool par = !csv["parallela"].empty() && csv["parallela"] == csv["parallelb"];
  const bool cross = csv["sequentiala"] == csv["parallela"];
  return {seq && par, std::string("sequential reruns ") + (seq ? "identical" : "differ") + ", parallel reruns " +
                          (par ? "identical" : "differ") + ", sequential vs parallel " +
                          (cross ? "identical" : "differ")};
}

Outcome schedule_values() {
  const double scaled = linear_scaling_lr(64, 32);
  ScheduleSpec step;
  step.base_lr = scaled;
  step.decay_epochs = {30, 60, 80};
  step.total_epochs = 90;
  step.iters_per_epoch = 100;
  const double at35 = lr_at(step, 35 * 100);
  ScheduleSpec cosine = step;
  cosine.kind = ScheduleKind::half_cosine;
  cosine.decay_epochs.clear();
  const double mid = lr_at(cosine, 45 * 100);
  return {scaled == 0.8 && at35 == 0.08 && mid == 0.4,
          "K=64,B=32 -> " + fmt("%.17g", scaled) + ", epoch 35 -> " + fmt("%.17g", at35) + ", cosine midpoint -> " +
              fmt("%.17g", mid)};
}

Outcome perf_properties() {
  const CommCostModel m;
  bool amortised = true;
  bool monotone = true;
  for (std::int64_t k : {2, 4, 8, 16, 32, 64}) {
    const double c1 = iteration_breakdown(k, 1, 32, Phase::local, m).communication;
    double prev = 0.0, prev_gain = INFINITY;
    for (std::int64_t h = 1; h <= 32; ++h) {
      amortised = amortised && iteration_breakdown(k, h, 32, Phase::local, m).communication == c1 / static_cast<double>(h);
      const double s = epoch_time_and_speedup(PerfPlan{k, 32, h, 100, 10, 0}, m).normalized_speedup;
      if (h > 1) {
        monotone = monotone && s >= prev && s - prev <= prev_gain;
        prev_gain = s - prev;
      }
      prev = s;
    }
  }
  const auto big = iteration_breakdown(64, 1, 32, Phase::sync, m);
  const auto node = iteration_breakdown(8, 1, 32, Phase::sync, m);
  const bool regimes = big.communication > big.compute() && node.communication < 0.2 * node.compute();
  return {amortised && monotone && regimes,
          std::string("comm/H ") + (amortised ? "exact" : "inexact") + ", speedup " +
              (monotone ? "monotone with shrinking gains" : "NOT monotone/concave") + ", K=64 comm/compute " +
              fmt("%.2f", big.communication / big.compute()) + ", K=8 comm/compute " +
              fmt("%.3f", node.communication / node.compute())};
}

SweepResult sweep(const char* name) {
  const fs::path out = g_work / "sweeps" / name;
  fs::remove_all(out);
  return run_sweep(load_sweep(g_source / "configs" / (std::string(name) + "_sweep.cfg")), out, 1);
}

Outcome tradeoff_t1() {
  const auto r = sweep("tradeoff");
  const auto s = trend_stats(r.aggregate);
  const double ratio = s.collapse_ratio();
  return {s.product_correlation <= -0.5 && ratio <= 0.5,
          std::to_string(s.cells) + " cells in " + std::to_string(s.groups) + " H*K groups, spearman " +
              fmt("%.3f", s.product_correlation) + ", within/between spread " + fmt("%.3f", ratio)};
}

Outcome tradeoff_t2() {
  const auto r = sweep("switch");
  const double rho = switch_point_correlation(r.aggregate);
  std::string medians;
  for (const auto& row : r.aggregate) {
    medians += "T=" + std::to_string(row.cell.switch_epoch) + ":" +
               (row.median_val_top1 ? fmt("%.4f", *row.median_val_top1) : std::string("missing")) + " ";
  }
  return {rho >= 0.5, "spearman(T, top1) " + fmt("%.3f", rho) + "; " + medians};
}

Outcome slowmo_trend() {
  const auto r = sweep("slowmo");
  std::map<std::int64_t, std::pair<std::optional<double>, std::optional<double>>> by_t;
  for (const auto& row : r.aggregate) {
    auto& slot = by_t[row.cell.switch_epoch];
    (row.cell.slowmo ? slot.second : slot.first) = row.median_val_top1;
  }
  int wins = 0;
  std::string detail;
  for (const auto& [t, pair] : by_t) {
    const bool win = pair.first && pair.second && *pair.second > *pair.first;
    wins += win ? 1 : 0;
    detail += "T=" + std::to_string(t) + (win ? " win" : " loss") + "; ";
  }
  return {wins >= 4 && by_t.size() == 5,
          std::to_string(wins) + "/" + std::to_string(by_t.size()) + " cells improved: " + detail};
}

}  // namespace

int main(int argc, char** argv) {
  g_work = fs::temp_directory_path() / "localsgd_acceptance";
  std::string only;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--work-dir") g_work = argv[i + 1];
    else if (flag == "--only") only = argv[i + 1];
  }
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"equivalence-E1", e1},
      {"equivalence-E2", e2},
      {"equivalence-E3", e3},
      {"equivalence-E4", e4},
      {"gradient-oracle", gradient_oracle},
      {"convex-oracle", convex_oracle},
      {"determinism", determinism},
      {"schedule-values", schedule_values},
      {"perf-model-properties", perf_properties},
      {"tradeoff-trend-T1", tradeoff_t1},
      {"tradeoff-trend-T2", tradeoff_t2},
      {"slowmo-trend", slowmo_trend},
  };

  int failed = 0;
  for (const auto& [name, check] : checks) {
    if (!only.empty() && name != only) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
