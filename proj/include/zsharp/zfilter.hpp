// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

// Layer-wise Z-score filtering of gradients.
//
// Each gradient tensor is centred and scaled by its own mean and population
// standard deviation. Components whose absolute Z-score lies strictly above
// the qp-th (nearest-rank) percentile are kept; the resulting binary mask is
// then applied to the original, un-normalized gradient.

#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "zsharp/layer_set.hpp"

namespace zsharp {

enum class PercentileScope {
  Global,    // one threshold over every |Z| in the model
  PerLayer,  // one threshold per tensor
};

std::string_view to_string(PercentileScope scope);
/// Accepts "global" and "per-layer"; throws ConfigError otherwise.
PercentileScope parse_scope(std::string_view text);

struct FilterConfig {
  double qp = 0.95;
  PercentileScope scope = PercentileScope::Global;
  double sigma_eps = 1e-12;

  /// Throws ConfigError unless 0 <= qp < 1 and sigma_eps > 0.
  void validate() const;
};

struct LayerStats {
  double mu = 0.0;
  double sigma = 0.0;
  bool degenerate = false;
};

/// One entry per gradient tensor.
using ZStats = std::vector<LayerStats>;

struct Mask {
  std::vector<std::uint8_t> bits;  // flattened order
  std::size_t kept_count = 0;

  std::size_t size() const noexcept { return bits.size(); }
  double kept_fraction() const noexcept {
    return bits.empty() ? 0.0 : static_cast<double>(kept_count) / static_cast<double>(bits.size());
  }
};

struct MaskResult {
  Mask mask;
  /// One value for Global scope, one per layer for PerLayer. May be -inf
  /// (the "keep all" sentinel at qp = 0).
  std::vector<double> thresholds;
};

struct FilterOutcome {
  ZStats stats;
  std::vector<double> thresholds;
  Mask mask;
  GradientSet filtered;
  double filtered_norm = 0.0;
};

/// Two-pass mean and population standard deviation per layer. Throws
/// ConfigError on an empty layer.
ZStats layer_stats(const GradientSet& g, double sigma_eps = 1e-12);

/// (g - mu) / sigma per layer; degenerate layers become all zeros.
GradientSet znormalize(const GradientSet& g, const ZStats& stats);

MaskResult build_mask(const GradientSet& omega, const FilterConfig& cfg);

/// Elementwise product of `g` with the mask. Throws ShapeError on length
/// mismatch.
GradientSet apply_mask(const GradientSet& g, const Mask& mask);

/// layer_stats -> znormalize -> build_mask -> apply_mask on the original g.
FilterOutcome filter_gradient(const GradientSet& g, const FilterConfig& cfg);

}  // namespace zsharp
