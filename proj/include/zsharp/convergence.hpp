// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

// Empirical checks of the ZSharp-SAM convergence bounds on full-batch
// quadratics, where the minibatch variance terms vanish.
//
// Constant steps: with eta <= 1/(4 beta) and beta^2 r^2 <= 1/4,
//   (1/T) sum_{t<T} ||grad L(w_t)||^2 <= 4 / (T eta) * (L(w_0) - L(w_T)).
// Diminishing steps eta_t, r_t with sum eta_t = inf, sum eta_t^2 < inf and
// sum eta_t r_t^2 < inf drive liminf ||grad L(w_t)||^2 to zero.

#pragma once

#include <cstddef>
#include <vector>

#include "zsharp/quadratic.hpp"
#include "zsharp/zfilter.hpp"

namespace zsharp {

enum class AscentVariant {
  /// w + r * filtered gradient, no normalization and no fallback.
  Unnormalized,
  /// w + eps with eps from compute_perturbation (radius r, with fallback).
  Normalized,
};

/// Relative slack allowed when checking eta <= 1/(4 beta) and
/// beta^2 r^2 <= 1/4, so boundary values like r = 0.05, beta = 10 pass
/// despite rounding in r * r.
inline constexpr double kPreconditionSlack = 1e-12;

/// Throws ConfigError naming the violated condition.
void check_step_preconditions(double beta, double eta, double r);

struct ConvergenceReport {
  std::size_t T = 0;
  double eta = 0.0;
  double r = 0.0;
  double beta = 0.0;
  double lhs = 0.0;  // (1/T) sum ||grad L(w_t)||^2
  double rhs = 0.0;  // 4 / (T eta) (L(w_0) - L(w_T))
  bool satisfied = false;
  FlatVec final_w;
};

/// Descent always uses the gradient at the ascended point and is applied
/// from w_t (the SAM update), not from the ascended point.
ConvergenceReport verify_constant_step(const QuadraticProblem& prob, double eta, double r, std::size_t T,
                                  AscentVariant variant, const FilterConfig& filter, const FlatVec& w0);

/// eta_t = eta0 / (1+t)^eta_power, r_t = r0 / (1+t)^r_power.
struct PowerSchedule {
  double eta0 = 0.025;
  double eta_power = 1.0;
  double r0 = 0.05;
  double r_power = 1.0;

  double eta_at(std::size_t t) const;
  double r_at(std::size_t t) const;
  /// Throws ConfigError unless the family satisfies the step-size
  /// conditions for smoothness `beta`.
  void validate(double beta) const;
};

struct DiminishingCheckpoint {
  std::size_t T = 0;
  double min_grad_norm_sq = 0.0;  // min over t <= T
};

struct DiminishingReport {
  std::vector<DiminishingCheckpoint> trace;
  bool monotone = false;        // min is non-increasing across checkpoints
  bool decreased = false;       // last checkpoint strictly below the first (or already zero)
  bool below_threshold = false;
  double threshold = 0.0;
  double weighted_sum = 0.0;    // sum_t eta_t ||grad L(w_t)||^2 up to the last checkpoint
  bool satisfied = false;       // monotone && decreased && below_threshold
};

/// Runs the diminishing-step recurrence up to the largest checkpoint.
/// `threshold` < 0 disables the threshold check.
DiminishingReport verify_diminishing_step(const QuadraticProblem& prob, const PowerSchedule& schedule,
                                  const FilterConfig& filter, const FlatVec& w0,
                                  std::vector<std::size_t> checkpoints, double threshold);

}  // namespace zsharp
