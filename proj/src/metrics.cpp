// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "localsgd/metrics.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "localsgd/error.hpp"

namespace localsgd {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::string to_csv_row(const MetricsRecord& r) {
  std::string row;
  row += r.run_id;
  row += ',' + std::to_string(r.seed);
  row += ',' + std::to_string(r.epoch);
  row += ',' + std::to_string(r.step);
  for (double v : {r.lr, r.train_loss, r.train_top1, r.val_loss, r.val_top1, r.sim_time_s,
                   r.comm_time_s, r.compute_time_s}) {
    row += ',' + format_double(v);
  }
  row += ',' + to_string(r.phase);
  return row;
}

namespace {

double parse_double(const std::string& cell) {
  if (cell == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw ParseError("metrics row: bad number `" + cell + "`");
  }
  return v;
}

}  // namespace

MetricsRecord parse_csv_row(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (cells.size() != 13) {
    throw ParseError("metrics row: expected 13 columns, got " + std::to_string(cells.size()));
  }
  MetricsRecord r;
  r.run_id = cells[0];
  r.seed = std::stoull(cells[1]);
  r.epoch = std::stoll(cells[2]);
  r.step = std::stoll(cells[3]);
  r.lr = parse_double(cells[4]);
  r.train_loss = parse_double(cells[5]);
  r.train_top1 = parse_double(cells[6]);
  r.val_loss = parse_double(cells[7]);
  r.val_top1 = parse_double(cells[8]);
  r.sim_time_s = parse_double(cells[9]);
  r.comm_time_s = parse_double(cells[10]);
  r.compute_time_s = parse_double(cells[11]);
  if (cells[12] == "sync") {
    r.phase = Phase::sync;
  } else if (cells[12] == "local") {
    r.phase = Phase::local;
  } else {
    throw ParseError("metrics row: bad phase `" + cells[12] + "`");
  }
  return r;
}

CsvSink::CsvSink(std::ostream& out) : out_(out) { out_ << kMetricsHeader << '\n' << std::flush; }

void CsvSink::write(const MetricsRecord& record) { out_ << to_csv_row(record) << '\n' << std::flush; }

}  // namespace localsgd
