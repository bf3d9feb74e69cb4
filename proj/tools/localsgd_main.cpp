// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: train, sweep, perf, trends.
// Exit codes: 0 ok, 2 configuration error, 3 numeric failure.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <set>

#include "localsgd/config.hpp"
#include "localsgd/error.hpp"
#include "localsgd/experiment.hpp"
#include "localsgd/trends.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

int cmd_train(const std::string& config, std::uint64_t seed, const std::string& out, const std::string& execution) {
  localsgd::ExperimentConfig cfg = localsgd::load_experiment(config);
  if (execution == "parallel") cfg.execution = localsgd::Execution::parallel;
  if (execution == "sequential") cfg.execution = localsgd::Execution::sequential;
  const auto result = localsgd::run_experiment(cfg, seed, out);
  std::cout << localsgd::kSummaryHeader << '\n' << localsgd::to_csv_row(result.summary) << '\n';
  if (result.summary.status != localsgd::RunStatus::ok) {
    std::cerr << "error: " << result.summary.diagnostic << '\n';
    return kExitNumeric;
  }
  return 0;
}

int cmd_sweep(const std::string& spec_file, const std::string& out, int jobs) {
  const localsgd::SweepSpec spec = localsgd::load_sweep(spec_file);
  const auto result = localsgd::run_sweep(spec, out, jobs);
  std::size_t failed = 0;
  for (const auto& r : result.runs) failed += r.status != localsgd::RunStatus::ok;
  std::cout << "runs: " << result.runs.size() << " (" << failed << " failed), cells: " << result.aggregate.size()
            << '\n';
  std::cout << "aggregate: " << (std::filesystem::path(out) / "aggregate.csv").string() << '\n';
  return 0;
}

int cmd_perf(const std::string& config) {
  localsgd::write_perf_table(localsgd::load_experiment(config), std::cout);
  return 0;
}

int cmd_trends(const std::string& aggregate) {
  const auto rows = localsgd::read_aggregate(aggregate);
  std::set<std::int64_t> products, switches;
  for (const auto& r : rows) {
    if (!r.median_val_top1) continue;
    products.insert(r.cell.product());
    switches.insert(r.cell.switch_epoch);
  }
  if (switches.size() >= 2) {
    std::printf("spearman(T, acc)      %+.4f\n", localsgd::switch_point_correlation(rows));
  }
  if (products.size() < 3 && switches.size() >= 2) return 0;

  const auto s = localsgd::trend_stats(rows);
  std::printf("cells                 %lld\n", static_cast<long long>(s.cells));
  std::printf("product groups        %lld\n", static_cast<long long>(s.groups));
  std::printf("spearman(log HK, acc) %+.4f\n", s.product_correlation);
  std::printf("within spread (max)   %.6f\n", s.within_spread_max);
  std::printf("within spread (mean)  %.6f\n", s.within_spread_mean);
  std::printf("between range         %.6f\n", s.between_range);
  std::printf("collapse ratio        %.4f\n", s.collapse_ratio());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"localsgd: deterministic local SGD training laboratory"};
  app.require_subcommand(1);

  std::string config, out, spec, aggregate, execution;
  std::uint64_t seed = 0;
  int jobs = 1;

  auto* train = app.add_subcommand("train", "run one experiment and write its metrics CSV");
  train->add_option("--config", config, "experiment config file")->required();
  train->add_option("--seed", seed, "run seed")->required();
  train->add_option("--out", out, "output directory")->required();
  train->add_option("--execution", execution, "override plan.execution")
      ->check(CLI::IsMember({"sequential", "parallel"}));

  auto* sweep = app.add_subcommand("sweep", "run a sweep and aggregate it");
  sweep->add_option("--spec", spec, "sweep file")->required();
  sweep->add_option("--out", out, "output directory")->required();
  sweep->add_option("--jobs", jobs, "concurrent runs")->check(CLI::PositiveNumber);

  auto* perf = app.add_subcommand("perf", "print the per-iteration time breakdown table");
  perf->add_option("--config", config, "experiment config file")->required();

  auto* trends = app.add_subcommand("trends", "trade-off statistics of an aggregate table");
  trends->add_option("--aggregate", aggregate, "aggregate.csv from a sweep")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*train) return cmd_train(config, seed, out, execution);
    if (*sweep) return cmd_sweep(spec, out, jobs);
    if (*perf) return cmd_perf(config);
    if (*trends) return cmd_trends(aggregate);
  } catch (const localsgd::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return 0;
}
