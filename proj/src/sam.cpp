// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "zsharp/sam.hpp"

#include <cmath>

#include "zsharp/errors.hpp"

namespace zsharp {

void AscentConfig::validate() const {
  if (!(rho > 0.0)) throw ConfigError("ascent.rho must be positive");
  if (!(delta > 0.0)) throw ConfigError("ascent.delta must be positive");
  if (filter) filter->validate();
}

GradientSet scale_to_radius(const GradientSet& direction, double rho, double delta) {
  const double scale = rho / (norm2(direction) + delta);
  GradientSet eps;
  for (const auto& layer : direction.layers()) {
    FlatVec v(layer.values.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = layer.values[i] * scale;
    eps.add(layer.id, layer.shape, std::move(v));
  }
  return eps;
}

Perturbation compute_perturbation(const GradientSet& g, const AscentConfig& cfg) {
  cfg.validate();
  Perturbation out;
  if (!cfg.filter) {
    out.source_norm = norm2(g);
    out.epsilon = scale_to_radius(g, cfg.rho, cfg.delta);
    return out;
  }

  out.filter = filter_gradient(g, *cfg.filter);
  if (out.filter->filtered_norm > 0.0) {
    out.source_norm = out.filter->filtered_norm;
    out.epsilon = scale_to_radius(out.filter->filtered, cfg.rho, cfg.delta);
  } else {
    out.fell_back = true;
    out.source_norm = norm2(g);
    out.epsilon = scale_to_radius(g, cfg.rho, cfg.delta);
  }
  return out;
}

ParamSet ascend(const ParamSet& w, const GradientSet& epsilon) {
  w.require_same_shape(epsilon, "ascend");
  ParamSet out = w;
  for (std::size_t l = 0; l < out.num_layers(); ++l) {
    auto& wl = out.values(l);
    const auto& el = epsilon.values(l);
    for (std::size_t i = 0; i < wl.size(); ++i) wl[i] += el[i];
  }
  return out;
}

namespace {

LossAndGrad checked_eval(const LossFn& loss_fn, const ParamSet& w, std::size_t step_index) {
  LossAndGrad result;
  try {
    result = loss_fn(w);
  } catch (const NumericError&) {
    throw DivergenceError(step_index);
  }
  if (!std::isfinite(result.loss) || !all_finite(result.grad)) throw DivergenceError(step_index);
  w.require_same_shape(result.grad, "loss gradient");
  return result;
}

}  // namespace

StepReport sam_step(const LossFn& loss_fn, ParamSet& w, BaseOptimizer& base, const AscentConfig& cfg,
                    double lr, std::size_t step_index) {
  const auto first = checked_eval(loss_fn, w, step_index);
  const auto perturbation = compute_perturbation(first.grad, cfg);
  const auto second = checked_eval(loss_fn, ascend(w, perturbation.epsilon), step_index);

  base.step(w, second.grad, lr);
  if (!all_finite(w)) throw DivergenceError(step_index);

  StepReport report;
  report.loss = first.loss;
  report.grad_norm = norm2(first.grad);
  report.eps_norm = norm2(perturbation.epsilon);
  report.fell_back = perturbation.fell_back;
  if (perturbation.filter) report.kept_fraction = perturbation.filter->mask.kept_fraction();
  return report;
}

StepReport base_step(const LossFn& loss_fn, ParamSet& w, BaseOptimizer& base, double lr, std::size_t step_index) {
  const auto eval = checked_eval(loss_fn, w, step_index);
  base.step(w, eval.grad, lr);
  if (!all_finite(w)) throw DivergenceError(step_index);

  StepReport report;
  report.loss = eval.loss;
  report.grad_norm = norm2(eval.grad);
  return report;
}

}  // namespace zsharp
