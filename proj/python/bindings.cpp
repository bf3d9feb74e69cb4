// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "localsgd/error.hpp"
#include "localsgd/experiment.hpp"
#include "localsgd/trends.hpp"

namespace py = pybind11;
using namespace localsgd;

namespace {

py::dict summary_dict(const RunSummary& s) {
  py::dict d;
  d["run_id"] = s.run_id;
  d["seed"] = s.seed;
  d["status"] = s.status == RunStatus::ok ? "ok" : "diverged";
  d["epochs"] = s.epochs_completed;
  d["steps"] = s.steps;
  d["final_train_loss"] = s.final_train_loss;
  d["final_val_loss"] = s.final_val_loss;
  d["final_val_top1"] = s.final_val_top1;
  d["sim_hours"] = s.sim_hours;
  d["comm_hours"] = s.comm_hours;
  d["compute_hours"] = s.compute_hours;
  d["diagnostic"] = s.diagnostic;
  return d;
}

py::dict aggregate_dict(const AggregateRow& r) {
  py::dict d;
  d["K"] = r.cell.workers;
  d["H"] = r.cell.local_steps;
  d["T"] = r.cell.switch_epoch;
  d["schedule"] = to_string(r.cell.schedule);
  d["slowmo"] = r.cell.slowmo;
  d["HK"] = r.cell.product();
  d["runs"] = r.runs;
  d["ok"] = r.ok;
  d["median_val_top1"] = r.median_val_top1;
  d["median_val_loss"] = r.median_val_loss;
  d["median_train_loss"] = r.median_train_loss;
  d["epoch_time_s"] = r.epoch_time_s;
  d["normalized_speedup"] = r.normalized_speedup;
  d["status"] = r.status == CellStatus::ok ? "ok" : r.status == CellStatus::partial ? "partial" : "missing";
  return d;
}

py::dict trends_dict(const std::vector<AggregateRow>& rows) {
  const TrendStats s = trend_stats(rows);
  py::dict d;
  d["product_correlation"] = s.product_correlation;
  d["within_spread_max"] = s.within_spread_max;
  d["within_spread_mean"] = s.within_spread_mean;
  d["between_range"] = s.between_range;
  d["collapse_ratio"] = s.collapse_ratio();
  d["groups"] = s.groups;
  d["cells"] = s.cells;
  return d;
}

Execution parse_execution(const std::string& text) {
  if (text == "sequential") return Execution::sequential;
  if (text == "parallel") return Execution::parallel;
  throw ConfigError("execution: expected sequential or parallel, got `" + text + "`");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Local SGD simulator core";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.attr("METRICS_HEADER") = std::string(kMetricsHeader);
  m.attr("SUMMARY_HEADER") = std::string(kSummaryHeader);
  m.attr("AGGREGATE_HEADER") = std::string(kAggregateHeader);

  m.def(
      "train",
      [](const std::filesystem::path& config, std::uint64_t seed, const std::filesystem::path& out,
         std::optional<std::string> execution) {
        std::optional<Execution> e;
        if (execution) e = parse_execution(*execution);
        ExperimentOutput result;
        {
          py::gil_scoped_release release;
          result = run_experiment(config, seed, out, e);
        }
        py::dict d = summary_dict(result.summary);
        d["metrics_csv"] = result.metrics_csv;
        return d;
      },
      py::arg("config"), py::arg("seed"), py::arg("out"), py::arg("execution") = py::none(),
      "Run one experiment; writes <out>/<run_id>.csv and returns the run summary.");

  m.def(
      "sweep",
      [](const std::filesystem::path& spec, const std::filesystem::path& out, int jobs) {
        const SweepSpec s = load_sweep(spec);
        SweepResult r;
        {
          py::gil_scoped_release release;
          r = run_sweep(s, out, jobs);
        }
        py::list rows;
        for (const auto& row : r.aggregate) rows.append(aggregate_dict(row));
        return rows;
      },
      py::arg("spec"), py::arg("out"), py::arg("jobs") = 1);

  m.def("sweep_run_count", [](const std::filesystem::path& spec) { return load_sweep(spec).run_count(); });

  m.def(
      "perf_table",
      [](const std::filesystem::path& config) {
        std::ostringstream out;
        write_perf_table(load_experiment(config), out);
        return out.str();
      },
      py::arg("config"), "Per-iteration timing breakdown as CSV text.");

  m.def(
      "read_aggregate",
      [](const std::filesystem::path& path) {
        py::list rows;
        for (const auto& row : read_aggregate(path)) rows.append(aggregate_dict(row));
        return rows;
      },
      py::arg("path"));

  m.def(
      "trends", [](const std::filesystem::path& path) { return trends_dict(read_aggregate(path)); },
      py::arg("aggregate"));

  m.def(
      "switch_point_correlation",
      [](const std::filesystem::path& path) { return switch_point_correlation(read_aggregate(path)); },
      py::arg("aggregate"));

  m.def(
      "spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return spearman(x, y); },
      py::arg("x"), py::arg("y"));

  m.def("linear_scaling_lr", &linear_scaling_lr, py::arg("workers"), py::arg("batch_size"));

  m.def(
      "lr_at",
      [](double base_lr, const std::string& kind, std::vector<std::int64_t> decay_epochs, double decay_factor,
         std::int64_t warmup_epochs, double warmup_start, std::int64_t total_epochs, std::int64_t iters_per_epoch,
         std::int64_t t) {
        ScheduleSpec s;
        s.base_lr = base_lr;
        s.kind = parse_schedule_kind(kind);
        s.decay_epochs = std::move(decay_epochs);
        s.decay_factor = decay_factor;
        s.warmup_epochs = warmup_epochs;
        s.warmup_start = warmup_start;
        s.total_epochs = total_epochs;
        s.iters_per_epoch = iters_per_epoch;
        s.validate();
        return lr_at(s, t);
      },
      py::arg("base_lr"), py::arg("kind") = "step", py::arg("decay_epochs") = std::vector<std::int64_t>{},
      py::arg("decay_factor") = 0.1, py::arg("warmup_epochs") = 0, py::arg("warmup_start") = 0.1,
      py::arg("total_epochs") = 1, py::arg("iters_per_epoch") = 1, py::arg("t") = 0);

  m.def(
      "allreduce_time", [](std::int64_t workers) { return allreduce_time(workers, CommCostModel{}); },
      py::arg("workers"), "Ring all-reduce time in seconds under the default cost model.");

  m.def(
      "iteration_breakdown",
      [](std::int64_t workers, std::int64_t local_steps, std::int64_t batch, const std::string& phase) {
        const Phase p = phase == "sync" ? Phase::sync : Phase::local;
        const TimeBreakdown b = iteration_breakdown(workers, local_steps, batch, p, CommCostModel{});
        py::dict d;
        d["data"] = b.data;
        d["forward"] = b.forward;
        d["backward"] = b.backward;
        d["update"] = b.update;
        d["communication"] = b.communication;
        d["compute"] = b.compute();
        d["total"] = b.total();
        return d;
      },
      py::arg("workers"), py::arg("local_steps"), py::arg("batch") = 32, py::arg("phase") = "local");
}
