// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "localsgd/engine.hpp"
#include "localsgd/perf_model.hpp"

namespace localsgd {

/// Flat `key = value` text. Keys are dotted (`plan.workers`); a `[plan]`
/// line prefixes the keys that follow it. `#` starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, const std::string& source = "<string>");
  static KeyValueConfig load(const std::filesystem::path& path);

  bool has(const std::string& key) const { return entries_.count(key) != 0; }
  void set(const std::string& key, const std::string& value) { entries_[key] = value; }
  void erase(const std::string& key) { entries_.erase(key); }
  const std::map<std::string, std::string>& entries() const { return entries_; }

  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::string require_string(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated. Integer lists also accept `a-b` ranges.
  std::vector<std::int64_t> get_int_list(const std::string& key, std::vector<std::int64_t> fallback) const;
  std::vector<double> get_double_list(const std::string& key, std::vector<double> fallback) const;
  std::vector<std::string> get_string_list(const std::string& key, std::vector<std::string> fallback) const;

  /// Throws ConfigError naming the first key not in `known`.
  void reject_unknown(const std::set<std::string>& known) const;

  /// Directory relative paths in values are resolved against.
  std::filesystem::path base_dir;

 private:
  std::map<std::string, std::string> entries_;
};

/// A validated experiment: the training plan plus timing and run settings.
struct ExperimentConfig {
  std::string name = "run";
  TrainingPlan plan;
  CommCostModel perf;
  Execution execution = Execution::sequential;
  std::vector<std::int64_t> perf_workers{1, 8, 16, 32, 64};
  std::vector<std::int64_t> perf_local_steps{1, 2, 4, 8, 16};
};

const std::set<std::string>& known_experiment_keys();

ExperimentConfig build_experiment(const KeyValueConfig& config);
ExperimentConfig load_experiment(const std::filesystem::path& path);

}  // namespace localsgd
