// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "localsgd/perf_model.hpp"

namespace localsgd {

/// One epoch-end row. Times are cumulative simulated seconds since the start
/// of the run; the engine leaves them at zero and the harness fills them in
/// from the event counts.
struct MetricsRecord {
  std::string run_id;
  std::uint64_t seed = 0;
  std::int64_t epoch = 0;  // 1-based, the epoch that just finished
  std::int64_t step = 0;   // optimizer steps per worker so far
  double lr = 0.0;         // lr of the epoch's last step
  double train_loss = 0.0;
  double train_top1 = 0.0;
  double val_loss = 0.0;
  double val_top1 = 0.0;
  double sim_time_s = 0.0;
  double comm_time_s = 0.0;
  double compute_time_s = 0.0;
  Phase phase = Phase::sync;

  // Not serialised.
  std::int64_t steps_in_epoch = 0;
  std::int64_t allreduces_in_epoch = 0;
};

inline constexpr std::string_view kMetricsHeader =
    "run_id,seed,epoch,step,lr,train_loss,train_top1,val_loss,val_top1,sim_time_s,comm_time_s,"
    "compute_time_s,phase";

/// Shortest round-trip decimal form; "nan" for NaN.
std::string format_double(double v);
std::string to_csv_row(const MetricsRecord& r);
MetricsRecord parse_csv_row(const std::string& line);

class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void write(const MetricsRecord& record) = 0;
};

class VectorSink : public MetricsSink {
 public:
  void write(const MetricsRecord& record) override { records.push_back(record); }
  std::vector<MetricsRecord> records;
};

/// Writes the header on construction and flushes after every row, so a run
/// that aborts still leaves a well-formed partial file.
class CsvSink : public MetricsSink {
 public:
  explicit CsvSink(std::ostream& out);
  void write(const MetricsRecord& record) override;

 private:
  std::ostream& out_;
};

}  // namespace localsgd
