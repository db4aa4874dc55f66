// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

namespace zsharp {

/// SplitMix64 finalizer; used to expand seeds and derive sub-stream seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derive an independent seed from a parent seed and a stream index.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// xoshiro256** seeded through SplitMix64. Output is identical on every
/// platform for a given seed; Gaussian samples use Box-Muller on the uniform
/// stream, so they are reproducible too (modulo libm `log`/`cos` rounding).
class SeededRng {
 public:
  using result_type = std::uint64_t;

  explicit SeededRng(std::uint64_t seed = 0);

  std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next_u64();
  std::uint64_t operator()() { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n), unbiased (rejection sampling). n > 0.
  std::uint64_t below(std::uint64_t n);
  double gaussian(double mean = 0.0, double stddev = 1.0);

  /// Fisher-Yates shuffle of 0..n-1.
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::array<std::uint64_t, 4> s_{};
  std::optional<double> spare_;
};

}  // namespace zsharp
