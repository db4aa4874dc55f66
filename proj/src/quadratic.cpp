// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "zsharp/quadratic.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "zsharp/errors.hpp"

namespace zsharp {

QuadraticProblem QuadraticProblem::diagonal(std::vector<double> diag) {
  if (diag.empty()) throw ConfigError("quadratic problem needs dimension >= 1");
  for (double d : diag) {
    if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("diagonal entries must be positive and finite");
  }
  const std::size_t n = diag.size();
  std::vector<double> a(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) a[i * n + i] = diag[i];
  const double beta = *std::max_element(diag.begin(), diag.end());
  return QuadraticProblem(n, std::move(a), beta);
}

QuadraticProblem QuadraticProblem::from_matrix(std::size_t dim, std::vector<double> a) {
  if (dim == 0 || a.size() != dim * dim) throw ConfigError("matrix must be dim x dim");
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      a.data(), static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  if (!m.isApprox(m.transpose(), 1e-12)) throw ConfigError("matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
  if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
    throw ConfigError("matrix must be positive definite");
  }
  const double beta = eig.eigenvalues().maxCoeff();
  return QuadraticProblem(dim, std::move(a), beta);
}

std::pair<double, FlatVec> QuadraticProblem::loss_grad(std::span<const double> w) const {
  if (w.size() != dim_) throw ShapeError("quadratic: dimension mismatch");
  FlatVec grad(dim_, 0.0);
  double loss = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) s += a_[i * dim_ + j] * w[j];
    grad[i] = s;
    loss += w[i] * s;
  }
  return {0.5 * loss, std::move(grad)};
}

LossFn QuadraticProblem::as_loss_fn() const {
  return [prob = *this](const ParamSet& w) {
    if (w.num_layers() != 1) throw ShapeError("quadratic loss expects a single layer");
    auto [loss, grad] = prob.loss_grad(w.values(0).span());
    LossAndGrad out;
    out.loss = loss;
    out.grad.add(w.layer(0).id, w.layer(0).shape, std::move(grad));
    return out;
  };
}

}  // namespace zsharp
