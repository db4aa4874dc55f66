// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "zsharp/convergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "zsharp/errors.hpp"
#include "zsharp/sam.hpp"

namespace zsharp {

void check_step_preconditions(double beta, double eta, double r) {
  if (!(beta > 0.0)) throw ConfigError("beta must be positive");
  if (!(eta > 0.0)) throw ConfigError("eta must be positive");
  if (!(r >= 0.0)) throw ConfigError("ascent radius must be non-negative");
  if (eta > (1.0 / (4.0 * beta)) * (1.0 + kPreconditionSlack)) throw ConfigError("eta exceeds 1/(4 beta)");
  if (beta * beta * r * r > 0.25 * (1.0 + kPreconditionSlack)) {
    throw ConfigError("ascent radius violates beta^2 r^2 <= 1/4");
  }
}

namespace {

// Offset added to w for the ascent half-step.
FlatVec ascent_offset(const FlatVec& grad, double r, AscentVariant variant, const FilterConfig& filter) {
  const auto g = GradientSet::single("w", grad);
  if (variant == AscentVariant::Unnormalized) {
    auto filtered = filter_gradient(g, filter).filtered.values(0);
    for (auto& x : filtered) x *= r;
    return filtered;
  }
  if (r == 0.0) return FlatVec(grad.size(), 0.0);
  return compute_perturbation(g, AscentConfig::zsharp(r, filter)).epsilon.values(0);
}

double squared_norm(const FlatVec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// One ZSharp-SAM step: w <- w - eta * grad L(w + ascent).
FlatVec zsharp_sam_update(const QuadraticProblem& prob, const FlatVec& w, const FlatVec& grad, double eta, double r,
                          AscentVariant variant, const FilterConfig& filter) {
  const auto offset = ascent_offset(grad, r, variant, filter);
  FlatVec half(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) half[i] = w[i] + offset[i];
  const auto [unused, g_half] = prob.loss_grad(half.span());
  FlatVec next(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) next[i] = w[i] - eta * g_half[i];
  return next;
}

}  // namespace

ConvergenceReport verify_constant_step(const QuadraticProblem& prob, double eta, double r, std::size_t T,
                                  AscentVariant variant, const FilterConfig& filter, const FlatVec& w0) {
  check_step_preconditions(prob.beta(), eta, r);
  if (T == 0) throw ConfigError("T must be at least 1");
  if (w0.size() != prob.dim()) throw ShapeError("w0 dimension does not match the problem");
  filter.validate();

  ConvergenceReport report;
  report.T = T;
  report.eta = eta;
  report.r = r;
  report.beta = prob.beta();

  FlatVec w = w0;
  const double loss0 = prob.loss_grad(w.span()).first;
  double sum_sq = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    const auto [loss, grad] = prob.loss_grad(w.span());
    sum_sq += squared_norm(grad);
    w = zsharp_sam_update(prob, w, grad, eta, r, variant, filter);
  }
  const double lossT = prob.loss_grad(w.span()).first;

  report.lhs = sum_sq / static_cast<double>(T);
  report.rhs = 4.0 / (static_cast<double>(T) * eta) * (loss0 - lossT);
  report.satisfied = report.lhs <= report.rhs;
  report.final_w = std::move(w);
  return report;
}

double PowerSchedule::eta_at(std::size_t t) const {
  return eta0 / std::pow(1.0 + static_cast<double>(t), eta_power);
}

double PowerSchedule::r_at(std::size_t t) const { return r0 / std::pow(1.0 + static_cast<double>(t), r_power); }

void PowerSchedule::validate(double beta) const {
  // Both sequences are non-increasing for non-negative powers, so the
  // per-step conditions only need checking at t = 0.
  if (eta_power < 0.0 || r_power < 0.0) throw ConfigError("schedule powers must be non-negative");
  check_step_preconditions(beta, eta0, r0);
  if (eta_power > 1.0) throw ConfigError("step sizes must satisfy sum eta_t = infinity (eta power <= 1)");
  if (eta_power <= 0.5) throw ConfigError("step sizes must satisfy sum eta_t^2 < infinity (eta power > 1/2)");
  if (r0 > 0.0 && eta_power + 2.0 * r_power <= 1.0) {
    throw ConfigError("schedules must satisfy sum eta_t r_t^2 < infinity (eta power + 2 r power > 1)");
  }
}

DiminishingReport verify_diminishing_step(const QuadraticProblem& prob, const PowerSchedule& schedule,
                                  const FilterConfig& filter, const FlatVec& w0,
                                  std::vector<std::size_t> checkpoints, double threshold) {
  schedule.validate(prob.beta());
  filter.validate();
  if (checkpoints.empty()) throw ConfigError("at least one checkpoint is required");
  if (w0.size() != prob.dim()) throw ShapeError("w0 dimension does not match the problem");
  std::sort(checkpoints.begin(), checkpoints.end());
  checkpoints.erase(std::unique(checkpoints.begin(), checkpoints.end()), checkpoints.end());

  DiminishingReport report;
  report.threshold = threshold;
  FlatVec w = w0;
  double running_min = std::numeric_limits<double>::infinity();
  std::size_t next_cp = 0;
  const auto last = checkpoints.back();
  for (std::size_t t = 0; t <= last; ++t) {
    const auto [loss, grad] = prob.loss_grad(w.span());
    const double sq = squared_norm(grad);
    running_min = std::min(running_min, sq);
    if (t < last) report.weighted_sum += schedule.eta_at(t) * sq;
    if (t == checkpoints[next_cp]) {
      report.trace.push_back({t, running_min});
      ++next_cp;
    }
    if (t < last) {
      w = zsharp_sam_update(prob, w, grad, schedule.eta_at(t), schedule.r_at(t), AscentVariant::Unnormalized,
                            filter);
    }
  }

  report.monotone = true;
  for (std::size_t i = 1; i < report.trace.size(); ++i) {
    if (report.trace[i].min_grad_norm_sq > report.trace[i - 1].min_grad_norm_sq) report.monotone = false;
  }
  const double first = report.trace.front().min_grad_norm_sq;
  const double final_min = report.trace.back().min_grad_norm_sq;
  report.decreased = final_min < first || final_min == 0.0;
  report.below_threshold = threshold < 0.0 || final_min < threshold;
  report.satisfied = report.monotone && report.decreased && report.below_threshold;
  return report;
}

}  // namespace zsharp
