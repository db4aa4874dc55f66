// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <utility>
#include <vector>

#include "zsharp/core_math.hpp"
#include "zsharp/sam.hpp"

namespace zsharp {

/// L(w) = 1/2 w^T A w with A symmetric positive definite. `beta` is the
/// largest eigenvalue of A, i.e. the exact smoothness constant.
class QuadraticProblem {
 public:
  static QuadraticProblem diagonal(std::vector<double> diag);
  /// Row-major dim x dim matrix; throws ConfigError unless symmetric PD.
  static QuadraticProblem from_matrix(std::size_t dim, std::vector<double> a);

  std::size_t dim() const noexcept { return dim_; }
  double beta() const noexcept { return beta_; }
  double a(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }

  /// (1/2 w^T A w, A w).
  std::pair<double, FlatVec> loss_grad(std::span<const double> w) const;
  /// Single-layer adapter for the SAM machinery; the layer id is "w".
  LossFn as_loss_fn() const;

 private:
  QuadraticProblem(std::size_t dim, std::vector<double> a, double beta)
      : dim_(dim), a_(std::move(a)), beta_(beta) {}

  std::size_t dim_;
  std::vector<double> a_;
  double beta_;
};

inline std::pair<double, FlatVec> quadratic_loss_grad(const QuadraticProblem& prob, const FlatVec& w) {
  return prob.loss_grad(w.span());
}

}  // namespace zsharp
