// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "zsharp/core_math.hpp"
#include "zsharp/errors.hpp"
#include "zsharp/rng.hpp"

using namespace zsharp;

TEST_CASE("norm2 examples") {
  CHECK(norm2(FlatVec{3.0, 4.0}) == 5.0);
  CHECK(norm2(FlatVec{0.0, 0.0, 0.0}) == 0.0);
  CHECK(norm2(FlatVec{1.0, 1.0, 1.0, 1.0}) == 2.0);
}

TEST_CASE("norm2 is absolutely homogeneous") {
  SeededRng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    FlatVec v(1 + rng.below(50));
    for (auto& x : v) x = rng.gaussian();
    const double a = rng.gaussian(0.0, 10.0);
    FlatVec av = v;
    for (auto& x : av) x *= a;
    CHECK(std::abs(norm2(av) - std::abs(a) * norm2(v)) <= 1e-12 * std::abs(a) * norm2(v));
  }
}

TEST_CASE("dot and all_finite") {
  CHECK(dot(FlatVec{1.0, 2.0, 3.0}, FlatVec{4.0, 5.0, 6.0}) == 32.0);
  CHECK(all_finite(FlatVec{1.0, -2.0}));
  CHECK_FALSE(all_finite(FlatVec{1.0, std::numeric_limits<double>::quiet_NaN()}));
  CHECK_FALSE(all_finite(FlatVec{std::numeric_limits<double>::infinity()}));
}

TEST_CASE("FlatVec rejects non-finite external input") {
  CHECK_THROWS_AS(FlatVec::from_external({1.0, std::numeric_limits<double>::quiet_NaN()}), ConfigError);
  CHECK_THROWS_AS(FlatVec::from_external({-std::numeric_limits<double>::infinity()}), ConfigError);
  CHECK(FlatVec::from_external({1.0, 2.0}).size() == 2);
}

TEST_CASE("percentile_threshold examples") {
  CHECK(percentile_threshold(FlatVec{1, 2, 3, 4, 5}, 0.8) == 4.0);
  const double t0 = percentile_threshold(FlatVec{7, 7, 7}, 0.0);
  CHECK(std::isinf(t0));
  CHECK(t0 < 0.0);
  const FlatVec ties{2, 2, 2, 2};
  const double t = percentile_threshold(ties, 0.5);
  CHECK(t == 2.0);
  CHECK(std::count_if(ties.begin(), ties.end(), [&](double x) { return x > t; }) == 0);
}

TEST_CASE("percentile_threshold errors") {
  CHECK_THROWS_WITH_AS(percentile_threshold(FlatVec{}, 0.5), "empty percentile input", ConfigError);
  CHECK_THROWS_AS(percentile_threshold(FlatVec{1.0}, 1.0), ConfigError);
  CHECK_THROWS_AS(percentile_threshold(FlatVec{1.0}, -0.1), ConfigError);
}

TEST_CASE("percentile_threshold is permutation invariant") {
  SeededRng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<double> v(n);
    for (auto& x : v) x = std::abs(rng.gaussian());
    if (trial % 3 == 0) {
      for (auto& x : v) x = std::round(x * 2.0);  // plenty of ties
    }
    const double qp = rng.uniform();
    const double base = percentile_threshold(FlatVec(v), qp);
    const auto perm = rng.permutation(n);
    std::vector<double> shuffled(n);
    for (std::size_t i = 0; i < n; ++i) shuffled[i] = v[perm[i]];
    CHECK(percentile_threshold(FlatVec(shuffled), qp) == base);
  }
}

TEST_CASE("distinct values keep n - floor(qp n) above the threshold") {
  SeededRng rng(5);
  for (std::size_t n : {1u, 2u, 7u, 10u, 33u, 100u, 1000u}) {
    std::vector<double> v(n);
    for (auto& x : v) x = std::abs(rng.gaussian()) + 1e-3;
    for (double qp : {0.0, 0.1, 0.5, 0.75, 0.8, 0.85, 0.9, 0.95, 0.99}) {
      const double t = percentile_threshold(FlatVec(v), qp);
      const auto kept = static_cast<std::size_t>(std::count_if(v.begin(), v.end(), [&](double x) { return x > t; }));
      CHECK(kept == n - static_cast<std::size_t>(std::floor(qp * static_cast<double>(n))));
    }
  }
}

TEST_CASE("percentile_threshold matches a full-sort reference") {
  SeededRng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(64);
    std::vector<double> v(n);
    for (auto& x : v) x = std::floor(std::abs(rng.gaussian()) * 4.0);
    const double qp = rng.uniform();
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const auto k = static_cast<std::size_t>(std::floor(qp * static_cast<double>(n)));
    const double expected = k == 0 ? -std::numeric_limits<double>::infinity() : sorted[k - 1];
    CHECK(percentile_threshold(FlatVec(v), qp) == expected);
  }
}

TEST_CASE("SeededRng is reproducible") {
  SeededRng a(42);
  SeededRng b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());
  for (int i = 0; i < 1000; ++i) REQUIRE(a.gaussian() == b.gaussian());
  CHECK(a.permutation(50) == b.permutation(50));
  SeededRng c(43);
  CHECK(SeededRng(42).next_u64() != c.next_u64());
}

TEST_CASE("SeededRng golden values") {
  // splitmix64 reference outputs for state 0.
  std::uint64_t state = 0;
  CHECK(splitmix64(state) == 0xe220a8397b1dcdafULL);
  CHECK(splitmix64(state) == 0x6e789e6aa1b965f4ULL);
}

TEST_CASE("SeededRng distributions") {
  SeededRng rng(1);
  double sum = 0.0;
  double sum_sq = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double g = rng.gaussian();
    sum += g;
    sum_sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.02);
  CHECK(std::abs(sum_sq / n - 1.0) < 0.02);

  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (int c : counts) CHECK(std::abs(c - 10000) < 500);

  auto perm = rng.permutation(100);
  std::sort(perm.begin(), perm.end());
  for (std::size_t i = 0; i < perm.size(); ++i) CHECK(perm[i] == i);
}

TEST_CASE("format_double round-trips") {
  SeededRng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const double x = rng.gaussian(0.0, 1e6) * std::pow(10.0, static_cast<double>(rng.below(20)) - 10.0);
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(5.0) == "5");
}
