// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "localsgd/experiment.hpp"

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "localsgd/error.hpp"

namespace localsgd {

TimingSink::TimingSink(MetricsSink& inner, const CommCostModel& model, std::int64_t workers,
                       std::int64_t batch)
    : inner_(inner),
      compute_per_step_(iteration_breakdown(workers, 1, batch, Phase::sync, model).compute()),
      allreduce_(allreduce_time(workers, model)) {}

void TimingSink::write(const MetricsRecord& record) {
  compute_ += static_cast<double>(record.steps_in_epoch) * compute_per_step_;
  comm_ += static_cast<double>(record.allreduces_in_epoch) * allreduce_;
  MetricsRecord timed = record;
  timed.compute_time_s = compute_;
  timed.comm_time_s = comm_;
  timed.sim_time_s = compute_ + comm_;
  inner_.write(timed);
}

namespace {

class LastRecordSink : public MetricsSink {
 public:
  explicit LastRecordSink(MetricsSink& inner) : inner_(inner) {}
  void write(const MetricsRecord& record) override {
    last = record;
    inner_.write(record);
  }
  std::optional<MetricsRecord> last;

 private:
  MetricsSink& inner_;
};

std::string status_name(RunStatus s) { return s == RunStatus::ok ? "ok" : "diverged"; }

std::string cell_status_name(CellStatus s) {
  switch (s) {
    case CellStatus::ok: return "ok";
    case CellStatus::partial: return "partial";
    case CellStatus::missing: return "missing";
  }
  return "?";
}

std::string optional_cell(const std::optional<double>& v) { return v ? format_double(*v) : ""; }

}  // namespace

std::string to_csv_row(const RunSummary& s) {
  std::string row = s.run_id + ',' + std::to_string(s.seed) + ',' + status_name(s.status) + ',' +
                    std::to_string(s.epochs_completed) + ',' + std::to_string(s.steps);
  for (double v : {s.final_train_loss, s.final_val_loss, s.final_val_top1, s.sim_hours, s.comm_hours,
                   s.compute_hours}) {
    row += ',' + format_double(v);
  }
  return row;
}

ExperimentOutput run_experiment(const ExperimentConfig& config, std::uint64_t seed,
                                const std::filesystem::path& out_dir, std::optional<std::string> run_id) {
  const std::string id = run_id.value_or(config.name + "-s" + std::to_string(seed));
  std::filesystem::create_directories(out_dir);
  ExperimentOutput out;
  out.metrics_csv = out_dir / (id + ".csv");
  const auto failed_marker = out_dir / (id + ".FAILED");
  std::filesystem::remove(failed_marker);

  TrainingPlan plan = config.plan;
  plan.seed = seed;

  RunSummary& s = out.summary;
  s.run_id = id;
  s.seed = seed;
  {
    std::ofstream csv(out.metrics_csv, std::ios::binary | std::ios::trunc);
    if (!csv) throw ConfigError("cannot write " + out.metrics_csv.string());
    CsvSink csv_sink(csv);
    LastRecordSink last(csv_sink);
    TimingSink timing(last, config.perf, plan.workers, plan.batch_size);
    try {
      const FinalReport report = run(plan, timing, RunOptions{config.execution, id, {}});
      s.status = RunStatus::ok;
      s.steps = report.steps_per_worker;
    } catch (const TrainingDiverged& e) {
      s.status = RunStatus::diverged;
      s.diagnostic = e.what();
      s.steps = e.step;
      std::ofstream marker(failed_marker, std::ios::binary | std::ios::trunc);
      marker << "status=diverged\nepoch=" << e.epoch << "\nstep=" << e.step << "\nmessage=" << e.what()
             << '\n';
    }
    if (last.last) {
      s.epochs_completed = last.last->epoch;
      s.final_train_loss = last.last->train_loss;
      s.final_val_loss = last.last->val_loss;
      s.final_val_top1 = last.last->val_top1;
      if (s.status == RunStatus::ok) s.steps = last.last->step;
    }
    s.sim_hours = (timing.compute_time() + timing.comm_time()) / 3600.0;
    s.comm_hours = timing.comm_time() / 3600.0;
    s.compute_hours = timing.compute_time() / 3600.0;
  }
  if (s.status != RunStatus::ok) {
    s.final_train_loss = s.final_val_loss = s.final_val_top1 = std::nan("");
  }

  std::ofstream summary(out_dir / (id + ".summary.csv"), std::ios::binary | std::ios::trunc);
  summary << kSummaryHeader << '\n' << to_csv_row(s) << '\n';
  return out;
}

ExperimentOutput run_experiment(const std::filesystem::path& config_file, std::uint64_t seed,
                                const std::filesystem::path& out_dir, std::optional<Execution> execution) {
  ExperimentConfig config = load_experiment(config_file);
  if (execution) config.execution = *execution;
  return run_experiment(config, seed, out_dir);
}

void write_perf_table(const ExperimentConfig& config, std::ostream& out) {
  const std::size_t n = load_or_generate(config.plan.train_data).size();
  out << "K,H,phase,data_s,forward_s,backward_s,update_s,comm_s,compute_s,total_s,epoch_time_s,"
         "normalized_speedup\n";
  for (std::int64_t k : config.perf_workers) {
    const ShardGeometry geometry{n, static_cast<std::size_t>(k), static_cast<std::size_t>(config.plan.batch_size)};
    const auto iters = static_cast<std::int64_t>(geometry.full_iterations());
    for (std::int64_t h : config.perf_local_steps) {
      const Phase phase = h == 1 ? Phase::sync : Phase::local;
      const TimeBreakdown b = iteration_breakdown(k, h, config.plan.batch_size, phase, config.perf);
      out << k << ',' << h << ',' << to_string(phase);
      for (double v : {b.data, b.forward, b.backward, b.update, b.communication, b.compute(), b.total()}) {
        out << ',' << format_double(v);
      }
      if (iters > 0) {
        const PerfPlan pp{k, config.plan.batch_size, h, iters, config.plan.epochs, config.plan.switch_epoch};
        const EpochTiming et = epoch_time_and_speedup(pp, config.perf);
        out << ',' << format_double(et.epoch_time) << ',' << format_double(et.normalized_speedup) << '\n';
      } else {
        out << ",,\n";
      }
    }
  }
}

// Sweeps ---------------------------------------------------------------------

std::string SweepCell::label() const {
  std::string s = "K" + std::to_string(workers) + "-H" + std::to_string(local_steps) + "-T" +
                  std::to_string(switch_epoch) + "-" + to_string(schedule);
  if (slowmo) s += "-slowmo";
  return s;
}

std::vector<SweepCell> SweepSpec::cells() const {
  std::vector<SweepCell> out;
  for (auto k : workers)
    for (auto h : local_steps)
      for (auto t : switch_epochs)
        for (auto sched : schedules)
          for (bool sm : slowmo) out.push_back(SweepCell{k, h, t, sched, sm});
  return out;
}

ExperimentConfig SweepSpec::cell_config(const SweepCell& cell) const {
  KeyValueConfig cfg = base;
  cfg.set("plan.workers", std::to_string(cell.workers));
  cfg.set("plan.local_steps", std::to_string(cell.local_steps));
  cfg.set("plan.switch_epoch", std::to_string(cell.switch_epoch));
  cfg.set("schedule.kind", to_string(cell.schedule));
  cfg.set("slowmo.enabled", cell.slowmo ? "true" : "false");
  cfg.set("run.name", name);
  return build_experiment(cfg);
}

SweepSpec parse_sweep(const KeyValueConfig& sweep_file, KeyValueConfig base) {
  static const std::set<std::string> sweep_keys = {
      "sweep.base", "sweep.name", "sweep.workers", "sweep.local_steps", "sweep.switch_epochs",
      "sweep.schedules", "sweep.slowmo", "sweep.seeds", "sweep.budget"};
  for (const auto& [key, value] : sweep_file.entries()) {
    if (key.rfind("sweep.", 0) == 0) {
      if (!sweep_keys.count(key)) throw ConfigError(key + ": unknown sweep key");
    } else {
      if (!known_experiment_keys().count(key)) throw ConfigError(key + ": unknown configuration key");
      base.set(key, value);
    }
  }
  const ExperimentConfig defaults = build_experiment(base);

  SweepSpec spec;
  spec.base = std::move(base);
  spec.name = sweep_file.get_string("sweep.name", "sweep");
  spec.workers = sweep_file.get_int_list("sweep.workers", {defaults.plan.workers});
  spec.local_steps = sweep_file.get_int_list("sweep.local_steps", {defaults.plan.local_steps});
  spec.switch_epochs = sweep_file.get_int_list("sweep.switch_epochs", {defaults.plan.switch_epoch});
  for (const auto& s : sweep_file.get_string_list("sweep.schedules", {to_string(defaults.plan.schedule.kind)})) {
    spec.schedules.push_back(parse_schedule_kind(s));
  }
  for (const auto& s : sweep_file.get_string_list("sweep.slowmo", {defaults.plan.slowmo.enabled ? "on" : "off"})) {
    if (s == "on" || s == "true") {
      spec.slowmo.push_back(true);
    } else if (s == "off" || s == "false") {
      spec.slowmo.push_back(false);
    } else {
      throw ConfigError("sweep.slowmo: expected on/off values");
    }
  }
  for (auto seed : sweep_file.get_int_list("sweep.seeds", {0})) {
    if (seed < 0) throw ConfigError("sweep.seeds: seeds must be >= 0");
    spec.seeds.push_back(static_cast<std::uint64_t>(seed));
  }
  spec.budget = sweep_file.get_int("sweep.budget", 1000);

  if (spec.workers.empty() || spec.local_steps.empty() || spec.switch_epochs.empty() ||
      spec.schedules.empty() || spec.slowmo.empty() || spec.seeds.empty()) {
    throw ConfigError("sweep: every axis needs at least one value");
  }
  const std::size_t runs = spec.run_count();
  if (static_cast<std::int64_t>(runs) > spec.budget) {
    throw ConfigError("sweep.budget: " + std::to_string(runs) + " runs exceed the budget of " +
                      std::to_string(spec.budget));
  }
  for (const SweepCell& cell : spec.cells()) {
    try {
      (void)spec.cell_config(cell);
    } catch (const ConfigError& e) {
      throw ConfigError("sweep cell " + cell.label() + ": " + e.what());
    }
  }
  return spec;
}

SweepSpec load_sweep(const std::filesystem::path& path) {
  const KeyValueConfig sweep_file = KeyValueConfig::load(path);
  std::filesystem::path base_path = sweep_file.require_string("sweep.base");
  if (base_path.is_relative()) base_path = path.parent_path() / base_path;
  return parse_sweep(sweep_file, KeyValueConfig::load(base_path));
}

double median(std::vector<double> values) {
  if (values.empty()) throw ContractError("median: no values");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : (values[n / 2 - 1] + values[n / 2]) / 2.0;
}

std::string to_csv_row(const AggregateRow& r) {
  std::ostringstream row;
  row << r.cell.workers << ',' << r.cell.local_steps << ',' << r.cell.switch_epoch << ','
      << to_string(r.cell.schedule) << ',' << (r.cell.slowmo ? "on" : "off") << ',' << r.cell.product() << ','
      << r.runs << ',' << r.ok << ',' << optional_cell(r.median_val_top1) << ','
      << optional_cell(r.median_val_loss) << ',' << optional_cell(r.median_train_loss) << ','
      << format_double(r.epoch_time_s) << ',' << format_double(r.normalized_speedup) << ','
      << cell_status_name(r.status);
  return row.str();
}

void write_aggregate(const std::vector<AggregateRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << kAggregateHeader << '\n';
  for (const auto& r : rows) out << to_csv_row(r) << '\n';
}

std::vector<AggregateRow> read_aggregate(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != kAggregateHeader) {
    throw ParseError(path.string() + ": header does not match the aggregate schema");
  }
  std::vector<AggregateRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> c;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) c.push_back(cell);
    if (!line.empty() && line.back() == ',') c.emplace_back();
    if (c.size() != 14) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 14 columns");
    }
    auto opt = [](const std::string& s) -> std::optional<double> {
      if (s.empty()) return std::nullopt;
      return std::stod(s);
    };
    try {
      AggregateRow r;
      r.cell.workers = std::stoll(c[0]);
      r.cell.local_steps = std::stoll(c[1]);
      r.cell.switch_epoch = std::stoll(c[2]);
      r.cell.schedule = parse_schedule_kind(c[3]);
      r.cell.slowmo = c[4] == "on";
      r.runs = std::stoll(c[6]);
      r.ok = std::stoll(c[7]);
      r.median_val_top1 = opt(c[8]);
      r.median_val_loss = opt(c[9]);
      r.median_train_loss = opt(c[10]);
      r.epoch_time_s = std::stod(c[11]);
      r.normalized_speedup = std::stod(c[12]);
      r.status = c[13] == "ok" ? CellStatus::ok : c[13] == "partial" ? CellStatus::partial : CellStatus::missing;
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    } catch (const ConfigError&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
    }
  }
  return rows;
}

std::vector<AggregateRow> aggregate_runs(const SweepSpec& spec, const std::vector<SweepCell>& cells,
                                         const std::vector<RunSummary>& runs) {
  const std::size_t seeds = spec.seeds.size();
  if (runs.size() != cells.size() * seeds) throw ContractError("aggregate_runs: run count mismatch");
  const ExperimentConfig base = spec.cell_config(cells.front());
  const std::size_t n = load_or_generate(base.plan.train_data).size();

  std::vector<AggregateRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    AggregateRow row;
    row.cell = cells[c];
    std::vector<double> top1, vloss, tloss;
    for (std::size_t s = 0; s < seeds; ++s) {
      const RunSummary& r = runs[c * seeds + s];
      ++row.runs;
      if (r.status != RunStatus::ok) continue;
      ++row.ok;
      top1.push_back(r.final_val_top1);
      vloss.push_back(r.final_val_loss);
      tloss.push_back(r.final_train_loss);
    }
    if (row.ok > 0) {
      row.median_val_top1 = median(top1);
      row.median_val_loss = median(vloss);
      row.median_train_loss = median(tloss);
    }
    row.status = row.ok == row.runs ? CellStatus::ok : row.ok == 0 ? CellStatus::missing : CellStatus::partial;

    const ExperimentConfig cfg = spec.cell_config(cells[c]);
    const ShardGeometry geometry{n, static_cast<std::size_t>(cfg.plan.workers),
                                 static_cast<std::size_t>(cfg.plan.batch_size)};
    const auto iters = static_cast<std::int64_t>(geometry.full_iterations());
    if (iters > 0) {
      const EpochTiming et = epoch_time_and_speedup(
          PerfPlan{cfg.plan.workers, cfg.plan.batch_size, cfg.plan.local_steps, iters, cfg.plan.epochs,
                   cfg.plan.switch_epoch},
          cfg.perf);
      row.epoch_time_s = et.epoch_time;
      row.normalized_speedup = et.normalized_speedup;
    }
    rows.push_back(row);
  }
  return rows;
}

SweepResult run_sweep(const SweepSpec& spec, const std::filesystem::path& out_dir, int jobs) {
  const auto cells = spec.cells();
  const std::size_t seeds = spec.seeds.size();
  const std::size_t total = cells.size() * seeds;
  const auto runs_dir = out_dir / "runs";
  std::filesystem::create_directories(runs_dir);

  std::vector<ExperimentConfig> configs;
  configs.reserve(cells.size());
  for (const auto& cell : cells) {
    configs.push_back(spec.cell_config(cell));
    configs.back().execution = Execution::sequential;
  }

  SweepResult result;
  result.runs.resize(total);
  auto run_one = [&](std::size_t i) {
    const std::size_t c = i / seeds;
    const std::uint64_t seed = spec.seeds[i % seeds];
    const std::string id = spec.name + "-" + cells[c].label() + "-s" + std::to_string(seed);
    try {
      result.runs[i] = run_experiment(configs[c], seed, runs_dir, id).summary;
    } catch (const std::exception& e) {
      RunSummary failed;
      failed.run_id = id;
      failed.seed = seed;
      failed.status = RunStatus::diverged;
      failed.diagnostic = e.what();
      failed.final_train_loss = failed.final_val_loss = failed.final_val_top1 = std::nan("");
      std::ofstream marker(runs_dir / (id + ".FAILED"), std::ios::binary | std::ios::trunc);
      marker << "status=error\nmessage=" << e.what() << '\n';
      result.runs[i] = failed;
    }
  };
  if (jobs > 1) {
    tbb::task_arena arena(jobs);
    arena.execute([&] { tbb::parallel_for(std::size_t{0}, total, run_one); });
  } else {
    for (std::size_t i = 0; i < total; ++i) run_one(i);
  }

  {
    std::ofstream runs_csv(out_dir / "runs.csv", std::ios::binary | std::ios::trunc);
    runs_csv << "K,H,T,schedule,slowmo," << kSummaryHeader << '\n';
    for (std::size_t i = 0; i < total; ++i) {
      const SweepCell& cell = cells[i / seeds];
      runs_csv << cell.workers << ',' << cell.local_steps << ',' << cell.switch_epoch << ','
               << to_string(cell.schedule) << ',' << (cell.slowmo ? "on" : "off") << ','
               << to_csv_row(result.runs[i]) << '\n';
    }
  }
  result.aggregate = aggregate_runs(spec, cells, result.runs);
  write_aggregate(result.aggregate, out_dir / "aggregate.csv");
  return result;
}

}  // namespace localsgd
