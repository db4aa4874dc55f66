// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "zsharp/core_math.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>

#include "zsharp/errors.hpp"

namespace zsharp {

FlatVec FlatVec::from_external(std::vector<double> values) {
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw ConfigError("non-finite value at index " + std::to_string(i));
    }
  }
  return FlatVec(std::move(values));
}

double norm2(std::span<const double> v) {
  double sum = 0.0;
  for (double x : v) sum += x * x;
  return std::sqrt(sum);
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ShapeError("dot: length mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double percentile_threshold(std::span<const double> values, double qp) {
  if (values.empty()) throw ConfigError("empty percentile input");
  if (!(qp >= 0.0 && qp < 1.0)) throw ConfigError("percentile qp must be in [0, 1)");

  const auto n = values.size();
  const auto k = static_cast<std::size_t>(std::floor(qp * static_cast<double>(n)));
  if (k == 0) return -std::numeric_limits<double>::infinity();

  std::vector<double> sorted(values.begin(), values.end());
  auto nth = sorted.begin() + static_cast<std::ptrdiff_t>(k - 1);
  std::nth_element(sorted.begin(), nth, sorted.end());
  return *nth;
}

std::string format_double(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, end);
}

}  // namespace zsharp
