// Copyright (c) 2026 The localsgd-lab Authors
// SPDX-License-Identifier: Apache-2.0

#include "localsgd/optimizer.hpp"

#include <cmath>

#include "localsgd/error.hpp"

namespace localsgd {

std::string to_string(OptimizerKind kind) {
  return kind == OptimizerKind::nesterov_sgd ? "nesterov-sgd" : "lars";
}

OptimizerKind parse_optimizer_kind(const std::string& text) {
  if (text == "nesterov-sgd" || text == "sgd") return OptimizerKind::nesterov_sgd;
  if (text == "lars") return OptimizerKind::lars;
  throw ConfigError("optimizer.kind: unknown optimizer `" + text + "`");
}

void OptimizerConfig::validate() const {
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("optimizer.momentum: must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ConfigError("optimizer.weight_decay: must be >= 0");
  if (!(lars_trust > 0.0)) throw ConfigError("optimizer.lars_trust: must be > 0");
  if (!(lars_epsilon >= 0.0)) throw ConfigError("optimizer.lars_epsilon: must be >= 0");
}

namespace {

void check_step_args(const ParameterVector& w, const ParameterVector& v, const ParameterVector& g,
                     double lr, const char* what) {
  w.require_same_layout(v, what);
  w.require_same_layout(g, what);
  if (!(lr > 0.0) || !std::isfinite(lr)) throw ContractError(std::string(what) + ": lr must be > 0");
  if (!g.all_finite() || !w.all_finite() || !v.all_finite()) {
    throw NumericError(std::string(what) + ": non-finite input");
  }
}

}  // namespace

void nesterov_step(ParameterVector& w, ParameterVector& v, const ParameterVector& g, double lr,
                   double momentum) {
  check_step_args(w, v, g, lr, "nesterov_step");
  auto wv = w.values();
  auto vv = v.values();
  auto gv = g.values();
  for (std::size_t i = 0; i < wv.size(); ++i) {
    vv[i] = momentum * vv[i] + gv[i];
    wv[i] -= lr * (momentum * vv[i] + gv[i]);
  }
}

double lars_local_lr(double weight_norm, double grad_norm, const OptimizerConfig& config) {
  if (weight_norm == 0.0 || grad_norm == 0.0) return 1.0;
  double ratio = config.lars_trust * weight_norm /
                 (grad_norm + config.weight_decay * weight_norm + config.lars_epsilon);
  if (config.lars_clip && ratio > 1.0) ratio = 1.0;
  return ratio;
}

void lars_step(ParameterVector& w, ParameterVector& v, const ParameterVector& g, double lr,
               const OptimizerConfig& config) {
  check_step_args(w, v, g, lr, "lars_step");
  for (std::size_t s = 0; s < w.segment_count(); ++s) {
    auto ws = w.segment(s);
    auto vs = v.segment(s);
    auto gs = g.segment(s);
    const double local = lars_local_lr(l2_norm(ws), l2_norm(gs), config);
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const double scaled = local * gs[i];
      vs[i] = config.momentum * vs[i] + scaled;
      ws[i] -= lr * (config.momentum * vs[i] + scaled);
    }
  }
}

void optimizer_step(ParameterVector& w, ParameterVector& v, const ParameterVector& g, double lr,
                    const OptimizerConfig& config) {
  if (config.kind == OptimizerKind::lars) {
    lars_step(w, v, g, lr, config);
  } else {
    nesterov_step(w, v, g, lr, config.momentum);
  }
  if (!w.all_finite()) throw NumericError("optimizer step produced non-finite weights");
}

void SlowMoConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("slowmo.lr: must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("slowmo.momentum: must be in [0, 1)");
}

void SlowMoConfig::reset(const ParameterVector& model) {
  anchor = model;
  buffer = ParameterVector(model.layout_ptr(), 0.0);
}

ParameterVector slowmo_update(SlowMoConfig& cfg, const ParameterVector& w_avg) {
  if (!cfg.anchor || !cfg.buffer) throw ContractError("slowmo_update: anchor not initialised");
  ParameterVector& x = *cfg.anchor;
  ParameterVector& u = *cfg.buffer;
  x.require_same_layout(w_avg, "slowmo_update");
  x.require_same_layout(u, "slowmo_update");
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double delta = x[i] - w_avg[i];
    u[i] = cfg.momentum * u[i] + delta;
    x[i] = x[i] - cfg.lr * u[i];
  }
  if (!x.all_finite()) throw NumericError("slowmo_update: non-finite result");
  return x;
}

}  // namespace localsgd
