// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

// Two-phase sharpness-aware updates.
//
// A step evaluates g1 = grad L(w), builds a perturbation eps of radius rho
// (from g1 for SAM, from the Z-score filtered g1 for ZSharp), evaluates
// g2 = grad L(w + eps) on the same batch and hands g2 to the base optimizer
// at the original, unperturbed weights.

#pragma once

#include <cstddef>
#include <functional>
#include <optional>

#include "zsharp/layer_set.hpp"
#include "zsharp/optimizers.hpp"
#include "zsharp/zfilter.hpp"

namespace zsharp {

struct AscentConfig {
  double rho = 0.05;
  double delta = 1e-8;
  /// Present for ZSharp, absent for plain SAM.
  std::optional<FilterConfig> filter;

  static AscentConfig sam(double rho, double delta = 1e-8) { return {rho, delta, std::nullopt}; }
  static AscentConfig zsharp(double rho, FilterConfig filter, double delta = 1e-8) {
    return {rho, delta, filter};
  }

  bool is_zsharp() const noexcept { return filter.has_value(); }
  void validate() const;
};

struct Perturbation {
  GradientSet epsilon;
  /// Filter provenance (ZSharp only).
  std::optional<FilterOutcome> filter;
  /// True when ZSharp fell back to the full gradient because the filtered
  /// gradient had zero norm.
  bool fell_back = false;
  /// Norm of the vector eps was normalized from.
  double source_norm = 0.0;
};

/// Scales `direction` to rho * direction / (norm2(direction) + delta).
GradientSet scale_to_radius(const GradientSet& direction, double rho, double delta);

Perturbation compute_perturbation(const GradientSet& g, const AscentConfig& cfg);

/// Returns w + eps without modifying `w`.
ParamSet ascend(const ParamSet& w, const GradientSet& epsilon);

struct LossAndGrad {
  double loss = 0.0;
  GradientSet grad;
};

/// Loss and gradient of a fixed batch as a function of the weights.
using LossFn = std::function<LossAndGrad(const ParamSet&)>;

struct StepReport {
  double loss = 0.0;        // at the pre-step weights
  double grad_norm = 0.0;   // norm2(g1)
  double eps_norm = 0.0;    // norm2(eps); 0 for a plain base step
  std::optional<double> kept_fraction;
  bool fell_back = false;
};

/// One SAM or ZSharp step. `w` is updated in place only by the base
/// optimizer on g2; the perturbed point is a separate copy. Throws
/// DivergenceError(step_index) on a non-finite loss or gradient.
StepReport sam_step(const LossFn& loss_fn, ParamSet& w, BaseOptimizer& base, const AscentConfig& cfg,
                    double lr, std::size_t step_index);

/// Plain base-optimizer step on grad L(w).
StepReport base_step(const LossFn& loss_fn, ParamSet& w, BaseOptimizer& base, double lr, std::size_t step_index);

}  // namespace zsharp
