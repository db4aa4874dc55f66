// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace zsharp {

/// Fixed-length vector of doubles. The length cannot change after
/// construction; use `from_external` for data that must be checked for
/// NaN/Inf.
class FlatVec {
 public:
  FlatVec() = default;
  explicit FlatVec(std::size_t n, double fill = 0.0) : values_(n, fill) {}
  explicit FlatVec(std::vector<double> values) : values_(std::move(values)) {}
  FlatVec(std::initializer_list<double> values) : values_(values) {}

  /// Throws ConfigError if any entry is non-finite.
  static FlatVec from_external(std::vector<double> values);

  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  double* data() noexcept { return values_.data(); }
  const double* data() const noexcept { return values_.data(); }

  auto begin() noexcept { return values_.begin(); }
  auto end() noexcept { return values_.end(); }
  auto begin() const noexcept { return values_.begin(); }
  auto end() const noexcept { return values_.end(); }

  std::span<double> span() noexcept { return values_; }
  std::span<const double> span() const noexcept { return values_; }
  operator std::span<const double>() const noexcept { return values_; }

  const std::vector<double>& values() const noexcept { return values_; }

  bool operator==(const FlatVec&) const = default;

 private:
  std::vector<double> values_;
};

/// Euclidean norm, summed in index order.
double norm2(std::span<const double> v);

double dot(std::span<const double> a, std::span<const double> b);

bool all_finite(std::span<const double> v);

/// Nearest-rank percentile of non-negative values: sorted ascending a[0..n),
/// k = floor(qp * n); returns a[k-1], or -infinity when k == 0 so that a
/// strict `>` comparison keeps every entry. Throws ConfigError on empty
/// input or qp outside [0, 1).
double percentile_threshold(std::span<const double> values, double qp);

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double x);

}  // namespace zsharp
