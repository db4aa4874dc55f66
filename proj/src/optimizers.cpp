// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "zsharp/optimizers.hpp"

#include <cmath>

namespace zsharp {

void Sgd::step(ParamSet& w, const GradientSet& g, double lr) {
  w.require_same_shape(g, "sgd step");
  const bool use_momentum = cfg_.momentum != 0.0;
  if (use_momentum && !velocity_) velocity_ = GradientSet::zeros_like(w);

  for (std::size_t l = 0; l < w.num_layers(); ++l) {
    auto& wl = w.values(l);
    const auto& gl = g.values(l);
    for (std::size_t i = 0; i < wl.size(); ++i) {
      double d = gl[i] + cfg_.weight_decay * wl[i];
      if (use_momentum) {
        auto& vel = velocity_->values(l)[i];
        vel = cfg_.momentum * vel + d;
        d = vel;
      }
      wl[i] -= lr * d;
    }
  }
}

void adamw_step(AdamWState& state, const AdamWConfig& cfg, ParamSet& w, const GradientSet& g, double lr) {
  w.require_same_shape(g, "adamw step");
  if (state.m.num_layers() == 0) {
    state.m = GradientSet::zeros_like(w);
    state.v = GradientSet::zeros_like(w);
  }
  state.m.require_same_shape(w, "adamw state");

  ++state.t;
  const double t = static_cast<double>(state.t);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);

  for (std::size_t l = 0; l < w.num_layers(); ++l) {
    auto& wl = w.values(l);
    auto& ml = state.m.values(l);
    auto& vl = state.v.values(l);
    const auto& gl = g.values(l);
    for (std::size_t i = 0; i < wl.size(); ++i) {
      ml[i] = cfg.beta1 * ml[i] + (1.0 - cfg.beta1) * gl[i];
      vl[i] = cfg.beta2 * vl[i] + (1.0 - cfg.beta2) * gl[i] * gl[i];
      const double m_hat = ml[i] / bias1;
      const double v_hat = vl[i] / bias2;
      wl[i] -= lr * (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * wl[i]);
    }
  }
}

void LrSchedule::validate() const {
  if (!(base_lr > 0.0)) throw ConfigError("schedule.lr must be positive");
  if (kind == Kind::StepDecay) {
    if (!(factor > 0.0)) throw ConfigError("schedule.factor must be positive");
    if (every_n_epochs == 0) throw ConfigError("schedule.every must be at least 1");
  }
}

double lr_at(const LrSchedule& schedule, std::size_t epoch) {
  if (schedule.kind == LrSchedule::Kind::Constant) return schedule.base_lr;
  const auto decays = epoch / schedule.every_n_epochs;
  return schedule.base_lr * std::pow(schedule.factor, static_cast<double>(decays));
}

}  // namespace zsharp
