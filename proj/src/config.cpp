// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "localsgd/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

#include "localsgd/error.hpp"

namespace localsgd {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  if (begin != end && *begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError(key + ": `" + text + "` is not a valid number");
  }
  return value;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, const std::string& source) {
  KeyValueConfig cfg;
  std::string section;
  std::size_t line_no = 0;
  std::stringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(source + ":" + std::to_string(line_no) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected `key = value`");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    if (!section.empty()) key = section + "." + key;
    if (cfg.entries_.count(key)) {
      throw ConfigError(key + ": given twice (" + source + ":" + std::to_string(line_no) + ")");
    }
    cfg.entries_[key] = trim(line.substr(eq + 1));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  KeyValueConfig cfg = parse(buf.str(), path.string());
  cfg.base_dir = path.parent_path();
  return cfg;
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : it->second;
}

std::string KeyValueConfig::require_string(const std::string& key) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) throw ConfigError(key + ": required key is missing");
  return it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_number<double>(key, it->second);
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : parse_number<std::int64_t>(key, it->second);
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "on" || v == "yes" || v == "1") return true;
  if (v == "false" || v == "off" || v == "no" || v == "0") return false;
  throw ConfigError(key + ": `" + v + "` is not a boolean");
}

std::vector<std::int64_t> KeyValueConfig::get_int_list(const std::string& key,
                                                       std::vector<std::int64_t> fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<std::int64_t> out;
  for (const std::string& item : split_list(it->second)) {
    const auto dash = item.find('-', 1);
    if (dash != std::string::npos) {
      const auto lo = parse_number<std::int64_t>(key, trim(item.substr(0, dash)));
      const auto hi = parse_number<std::int64_t>(key, trim(item.substr(dash + 1)));
      if (hi < lo) throw ConfigError(key + ": empty range `" + item + "`");
      for (std::int64_t v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(parse_number<std::int64_t>(key, item));
    }
  }
  return out;
}

std::vector<double> KeyValueConfig::get_double_list(const std::string& key, std::vector<double> fallback) const {
  auto it = entries_.find(key);
  if (it == entries_.end()) return fallback;
  std::vector<double> out;
  for (const std::string& item : split_list(it->second)) out.push_back(parse_number<double>(key, item));
  return out;
}

std::vector<std::string> KeyValueConfig::get_string_list(const std::string& key,
                                                         std::vector<std::string> fallback) const {
  auto it = entries_.find(key);
  return it == entries_.end() ? fallback : split_list(it->second);
}

void KeyValueConfig::reject_unknown(const std::set<std::string>& known) const {
  for (const auto& [key, value] : entries_) {
    if (!known.count(key)) throw ConfigError(key + ": unknown configuration key");
  }
}

const std::set<std::string>& known_experiment_keys() {
  static const std::set<std::string> keys = {
      "run.name",
      "model.kind", "model.layers", "model.weight_decay", "model.curvature", "model.target",
      "data.kind", "data.n_train", "data.n_val", "data.dim", "data.classes", "data.clusters", "data.separation",
      "data.spread", "data.label_noise", "data.noise", "data.seed", "data.train_images",
      "data.train_labels", "data.val_images", "data.val_labels", "data.max_train", "data.max_val",
      "data.train_csv", "data.val_csv",
      "plan.workers", "plan.batch_size", "plan.local_steps", "plan.switch_epoch", "plan.epochs",
      "plan.execution",
      "schedule.kind", "schedule.base_lr", "schedule.lr_per_256", "schedule.decay_epochs",
      "schedule.decay_factor", "schedule.warmup_epochs", "schedule.warmup_start",
      "optimizer.kind", "optimizer.momentum", "optimizer.lars_trust", "optimizer.lars_epsilon",
      "optimizer.lars_clip", "optimizer.momentum_correction",
      "slowmo.enabled", "slowmo.lr", "slowmo.momentum",
      "perf.intra_bw", "perf.inter_bw", "perf.latency", "perf.workers_per_node", "perf.data_s",
      "perf.forward_s", "perf.backward_s", "perf.update_s", "perf.model_bytes", "perf.workers",
      "perf.local_steps",
  };
  return keys;
}

namespace {

std::filesystem::path resolve(const KeyValueConfig& cfg, const std::string& key) {
  std::filesystem::path p = cfg.require_string(key);
  if (p.is_relative() && !cfg.base_dir.empty()) p = cfg.base_dir / p;
  return p;
}

ModelSpec build_model(const KeyValueConfig& cfg) {
  ModelSpec model;
  model.kind = parse_model_kind(cfg.require_string("model.kind"));
  model.weight_decay = cfg.get_double("model.weight_decay", 0.0);
  const auto layers = cfg.get_int_list("model.layers", {});
  for (std::int64_t s : layers) {
    if (s < 1) throw ConfigError("model.layers: layer sizes must be positive");
    model.layer_sizes.push_back(static_cast<std::size_t>(s));
  }
  if (model.kind == ModelKind::quadratic) {
    model.target = cfg.get_double_list("model.target", {});
    if (model.layer_sizes.empty()) model.layer_sizes = {model.target.size()};
    const std::size_t d = model.layer_sizes.at(0);
    const auto curv = cfg.get_double_list("model.curvature", std::vector<double>(d, 1.0));
    if (curv.size() == d) {
      model.curvature.assign(d * d, 0.0);
      for (std::size_t i = 0; i < d; ++i) model.curvature[i * d + i] = curv[i];
    } else {
      model.curvature = curv;
    }
  }
  model.validate();
  return model;
}

std::pair<DataSource, DataSource> build_data(const KeyValueConfig& cfg, const ModelSpec& model) {
  const std::string kind = cfg.get_string("data.kind", model.kind == ModelKind::quadratic ? "quadratic" : "blobs");
  const auto data_seed = static_cast<std::uint64_t>(cfg.get_int("data.seed", 0));
  auto positive = [&](const std::string& key, std::int64_t fallback) {
    const std::int64_t v = cfg.get_int(key, fallback);
    if (v < 1) throw ConfigError(key + ": must be ≥ 1");
    return static_cast<std::size_t>(v);
  };
  if (kind == "blobs") {
    SyntheticBlobsSource train;
    train.n = positive("data.n_train", 1000);
    train.dim = positive("data.dim", static_cast<std::int64_t>(model.input_dim()));
    train.classes = static_cast<int>(positive("data.classes", static_cast<std::int64_t>(model.output_dim())));
    train.clusters = static_cast<int>(positive("data.clusters", 1));
    train.separation = cfg.get_double("data.separation", 4.0);
    train.spread = cfg.get_double("data.spread", 1.0);
    train.label_noise = cfg.get_double("data.label_noise", 0.0);
    if (train.spread < 0.0) throw ConfigError("data.spread: must be >= 0");
    if (train.label_noise < 0.0 || train.label_noise > 1.0) throw ConfigError("data.label_noise: must be in [0, 1]");
    train.seed = data_seed;
    train.split = 0;
    SyntheticBlobsSource val = train;
    val.n = positive("data.n_val", 1000);
    val.split = 1;
    return {train, val};
  }
  if (kind == "quadratic") {
    SyntheticQuadraticSource train;
    train.n = positive("data.n_train", 64);
    train.dim = model.input_dim();
    train.noise = cfg.get_double("data.noise", 0.0);
    if (train.noise < 0.0) throw ConfigError("data.noise: must be >= 0");
    train.seed = data_seed;
    SyntheticQuadraticSource val = train;
    val.n = positive("data.n_val", 64);
    val.split = 1;
    return {train, val};
  }
  if (kind == "idx") {
    IdxSource train{resolve(cfg, "data.train_images"), resolve(cfg, "data.train_labels"),
                    static_cast<std::size_t>(cfg.get_int("data.max_train", 0))};
    IdxSource val{resolve(cfg, "data.val_images"), resolve(cfg, "data.val_labels"),
                  static_cast<std::size_t>(cfg.get_int("data.max_val", 0))};
    return {train, val};
  }
  if (kind == "csv") {
    return {CsvSource{resolve(cfg, "data.train_csv")}, CsvSource{resolve(cfg, "data.val_csv")}};
  }
  throw ConfigError("data.kind: unknown data source `" + kind + "` (expected blobs, quadratic, idx or csv)");
}

}  // namespace

ExperimentConfig build_experiment(const KeyValueConfig& cfg) {
  cfg.reject_unknown(known_experiment_keys());
  ExperimentConfig exp;
  exp.name = cfg.get_string("run.name", "run");
  if (exp.name.empty() || exp.name.find_first_of(",/\\ \t") != std::string::npos) {
    throw ConfigError("run.name: must be non-empty without commas, slashes or spaces");
  }

  TrainingPlan& plan = exp.plan;
  plan.workers = cfg.get_int("plan.workers", 1);
  plan.batch_size = cfg.get_int("plan.batch_size", 32);
  plan.local_steps = cfg.get_int("plan.local_steps", 1);
  plan.epochs = cfg.get_int("plan.epochs", 1);
  plan.switch_epoch = cfg.get_int("plan.switch_epoch", 0);
  if (plan.workers < 1) throw ConfigError("plan.workers: K must be ≥ 1");
  if (plan.batch_size < 1) throw ConfigError("plan.batch_size: B must be ≥ 1");
  if (plan.local_steps < 1) throw ConfigError("plan.local_steps: H must be ≥ 1");
  if (plan.epochs < 1) throw ConfigError("plan.epochs: E must be ≥ 1");
  if (plan.switch_epoch < 0) throw ConfigError("plan.switch_epoch: T must be ≥ 0");
  const std::string execution = cfg.get_string("plan.execution", "sequential");
  if (execution == "sequential") {
    exp.execution = Execution::sequential;
  } else if (execution == "parallel") {
    exp.execution = Execution::parallel;
  } else {
    throw ConfigError("plan.execution: expected sequential or parallel");
  }

  plan.model = build_model(cfg);
  std::tie(plan.train_data, plan.val_data) = build_data(cfg, plan.model);

  ScheduleSpec& s = plan.schedule;
  s.kind = parse_schedule_kind(cfg.get_string("schedule.kind", "step"));
  const std::string base = cfg.get_string("schedule.base_lr", "linear-scaling");
  if (base == "linear-scaling") {
    const double per_256 = cfg.get_double("schedule.lr_per_256", 0.1);
    if (!(per_256 > 0.0)) throw ConfigError("schedule.lr_per_256: must be > 0");
    s.base_lr = linear_scaling_lr(plan.workers, plan.batch_size) * (per_256 / 0.1);
  } else {
    if (cfg.has("schedule.lr_per_256")) {
      throw ConfigError("schedule.lr_per_256: only used with schedule.base_lr = linear-scaling");
    }
    s.base_lr = cfg.get_double("schedule.base_lr", 0.1);
  }
  s.decay_epochs = cfg.get_int_list("schedule.decay_epochs", {});
  s.decay_factor = cfg.get_double("schedule.decay_factor", 0.1);
  s.warmup_epochs = cfg.get_int("schedule.warmup_epochs", 0);
  s.warmup_start = cfg.get_double("schedule.warmup_start", std::min(0.1, s.base_lr));
  s.total_epochs = plan.epochs;
  s.iters_per_epoch = 1;
  s.validate();

  OptimizerConfig& o = plan.optimizer;
  o.kind = parse_optimizer_kind(cfg.get_string("optimizer.kind", "nesterov-sgd"));
  o.momentum = cfg.get_double("optimizer.momentum", 0.9);
  o.weight_decay = plan.model.weight_decay;
  o.lars_trust = cfg.get_double("optimizer.lars_trust", 0.02);
  o.lars_epsilon = cfg.get_double("optimizer.lars_epsilon", 1e-8);
  o.lars_clip = cfg.get_bool("optimizer.lars_clip", true);
  o.momentum_correction = cfg.get_bool("optimizer.momentum_correction", true);

  plan.slowmo.enabled = cfg.get_bool("slowmo.enabled", false);
  plan.slowmo.lr = cfg.get_double("slowmo.lr", 1.0);
  plan.slowmo.momentum = cfg.get_double("slowmo.momentum", 0.5);
  plan.validate();

  CommCostModel& p = exp.perf;
  p.intra_node_bandwidth = cfg.get_double("perf.intra_bw", p.intra_node_bandwidth);
  p.inter_node_bandwidth = cfg.get_double("perf.inter_bw", p.inter_node_bandwidth);
  p.link_latency = cfg.get_double("perf.latency", p.link_latency);
  p.workers_per_node = cfg.get_int("perf.workers_per_node", p.workers_per_node);
  p.data_per_sample = cfg.get_double("perf.data_s", p.data_per_sample);
  p.forward_per_sample = cfg.get_double("perf.forward_s", p.forward_per_sample);
  p.backward_per_sample = cfg.get_double("perf.backward_s", p.backward_per_sample);
  p.update_per_sample = cfg.get_double("perf.update_s", p.update_per_sample);
  if (cfg.get_string("perf.model_bytes", "") == "model") {
    p.model_bytes = 4.0 * static_cast<double>(parameter_count(plan.model));
  } else {
    p.model_bytes = cfg.get_double("perf.model_bytes", p.model_bytes);
  }
  p.validate();
  exp.perf_workers = cfg.get_int_list("perf.workers", exp.perf_workers);
  exp.perf_local_steps = cfg.get_int_list("perf.local_steps", exp.perf_local_steps);
  for (auto k : exp.perf_workers) {
    if (k < 1) throw ConfigError("perf.workers: K must be ≥ 1");
  }
  for (auto h : exp.perf_local_steps) {
    if (h < 1) throw ConfigError("perf.local_steps: H must be ≥ 1");
  }
  return exp;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  return build_experiment(KeyValueConfig::load(path));
}

}  // namespace localsgd
