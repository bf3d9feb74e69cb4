// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "localsgd/config.hpp"
#include "localsgd/engine.hpp"
#include "localsgd/metrics.hpp"
#include "localsgd/perf_model.hpp"

namespace localsgd {

/// Fills the cumulative simulated-time columns from each record's event
/// counts before forwarding it.
class TimingSink : public MetricsSink {
 public:
  TimingSink(MetricsSink& inner, const CommCostModel& model, std::int64_t workers, std::int64_t batch);
  void write(const MetricsRecord& record) override;

  double compute_time() const { return compute_; }
  double comm_time() const { return comm_; }

 private:
  MetricsSink& inner_;
  double compute_per_step_;
  double allreduce_;
  double compute_ = 0.0;
  double comm_ = 0.0;
};

enum class RunStatus { ok, diverged };

/// One row of `<run_id>.summary.csv` and of a sweep's `runs.csv`.
struct RunSummary {
  std::string run_id;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::ok;
  std::int64_t epochs_completed = 0;
  std::int64_t steps = 0;
  double final_train_loss = 0.0;
  double final_val_loss = 0.0;
  double final_val_top1 = 0.0;
  double sim_hours = 0.0;
  double comm_hours = 0.0;
  double compute_hours = 0.0;
  std::string diagnostic;  // empty unless diverged
};

inline constexpr std::string_view kSummaryHeader =
    "run_id,seed,status,epochs,steps,final_train_loss,final_val_loss,final_val_top1,sim_hours,"
    "comm_hours,compute_hours";

std::string to_csv_row(const RunSummary& s);

struct ExperimentOutput {
  RunSummary summary;
  std::filesystem::path metrics_csv;
};

/// Runs one experiment and writes `<out>/<run_id>.csv` and
/// `<out>/<run_id>.summary.csv`. On divergence the metrics file keeps the
/// rows written so far and `<out>/<run_id>.FAILED` holds the diagnostic.
ExperimentOutput run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                                const std::filesystem::path& out_dir,
                                std::optional<std::string> run_id = std::nullopt);

ExperimentOutput run_experiment(const std::filesystem::path& config_file, std::uint64_t seed,
                                const std::filesystem::path& out_dir,
                                std::optional<Execution> execution = std::nullopt);

/// Per-iteration breakdown over the configured K x H grid, CSV with header
/// `K,H,phase,data_s,forward_s,backward_s,update_s,comm_s,compute_s,total_s,epoch_time_s,normalized_speedup`.
void write_perf_table(const ExperimentConfig& config, std::ostream& out);

// Sweeps ---------------------------------------------------------------------

struct SweepCell {
  std::int64_t workers = 1;
  std::int64_t local_steps = 1;
  std::int64_t switch_epoch = 0;
  ScheduleKind schedule = ScheduleKind::step;
  bool slowmo = false;

  std::int64_t product() const { return workers * local_steps; }
  std::string label() const;
  auto operator<=>(const SweepCell&) const = default;
};

/// Sweep file: `sweep.base` names the base experiment config; `sweep.workers`,
/// `sweep.local_steps`, `sweep.switch_epochs`, `sweep.schedules`,
/// `sweep.slowmo` and `sweep.seeds` are the axes (missing axes take the base
/// value); `sweep.budget` caps the number of runs. Any other key overrides
/// the base config.
struct SweepSpec {
  KeyValueConfig base;
  std::string name = "sweep";
  std::vector<std::int64_t> workers;
  std::vector<std::int64_t> local_steps;
  std::vector<std::int64_t> switch_epochs;
  std::vector<ScheduleKind> schedules;
  std::vector<bool> slowmo;
  std::vector<std::uint64_t> seeds;
  std::int64_t budget = 1000;

  std::vector<SweepCell> cells() const;
  std::size_t run_count() const { return cells().size() * seeds.size(); }
  ExperimentConfig cell_config(const SweepCell& cell) const;
};

SweepSpec load_sweep(const std::filesystem::path& path);
SweepSpec parse_sweep(const KeyValueConfig& sweep_file, KeyValueConfig base);

enum class CellStatus { ok, partial, missing };

struct AggregateRow {
  SweepCell cell;
  std::int64_t runs = 0;
  std::int64_t ok = 0;
  std::optional<double> median_val_top1;
  std::optional<double> median_val_loss;
  std::optional<double> median_train_loss;
  double epoch_time_s = 0.0;
  double normalized_speedup = 1.0;
  CellStatus status = CellStatus::ok;
};

inline constexpr std::string_view kAggregateHeader =
    "K,H,T,schedule,slowmo,HK,runs,ok,median_val_top1,median_val_loss,median_train_loss,"
    "epoch_time_s,normalized_speedup,status";

std::string to_csv_row(const AggregateRow& row);
std::vector<AggregateRow> read_aggregate(const std::filesystem::path& path);
void write_aggregate(const std::vector<AggregateRow>& rows, const std::filesystem::path& path);

double median(std::vector<double> values);

struct SweepResult {
  std::vector<RunSummary> runs;
  std::vector<AggregateRow> aggregate;
};

/// Runs every cell x seed (up to `jobs` at a time) into `<out>/runs/`, then
/// writes `<out>/runs.csv` and `<out>/aggregate.csv`.
SweepResult run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir, int jobs = 1);

/// Median over seeds per cell; cells whose runs all failed are marked missing.
std::vector<AggregateRow> aggregate_runs(const SweepSpec& spec, const std::vector<SweepCell>& cells,
                                         const std::vector<RunSummary>& runs);

}  // namespace localsgd
