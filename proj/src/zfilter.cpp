// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "zsharp/zfilter.hpp"

#include <cmath>
#include <string>

namespace zsharp {

std::string_view to_string(PercentileScope scope) {
  return scope == PercentileScope::Global ? "global" : "per-layer";
}

PercentileScope parse_scope(std::string_view text) {
  if (text == "global") return PercentileScope::Global;
  if (text == "per-layer" || text == "perlayer" || text == "per_layer") return PercentileScope::PerLayer;
  throw ConfigError("unknown percentile scope '" + std::string(text) + "' (expected global or per-layer)");
}

void FilterConfig::validate() const {
  if (!(qp >= 0.0 && qp < 1.0)) {
    throw ConfigError("filter.qp must be in [0, 1): got " + format_double(qp));
  }
  if (!(sigma_eps > 0.0)) throw ConfigError("filter.sigma_eps must be positive");
}

ZStats layer_stats(const GradientSet& g, double sigma_eps) {
  ZStats stats;
  stats.reserve(g.num_layers());
  for (const auto& layer : g.layers()) {
    const auto& v = layer.values;
    if (v.empty()) throw ConfigError("layer '" + layer.id + "' is empty");
    const double n = static_cast<double>(v.size());

    double sum = 0.0;
    for (double x : v) sum += x;
    const double mu = sum / n;

    double sq = 0.0;
    for (double x : v) sq += (x - mu) * (x - mu);
    const double sigma = std::sqrt(sq / n);

    stats.push_back(LayerStats{mu, sigma, sigma < sigma_eps});
  }
  return stats;
}

GradientSet znormalize(const GradientSet& g, const ZStats& stats) {
  if (stats.size() != g.num_layers()) throw ShapeError("znormalize: stats do not match gradient layers");
  GradientSet omega;
  for (std::size_t l = 0; l < g.num_layers(); ++l) {
    const auto& layer = g.layer(l);
    const auto& s = stats[l];
    FlatVec z(layer.values.size(), 0.0);
    if (!s.degenerate) {
      for (std::size_t i = 0; i < z.size(); ++i) z[i] = (layer.values[i] - s.mu) / s.sigma;
    }
    omega.add(layer.id, layer.shape, std::move(z));
  }
  return omega;
}

MaskResult build_mask(const GradientSet& omega, const FilterConfig& cfg) {
  cfg.validate();
  MaskResult result;
  auto& mask = result.mask;
  mask.bits.assign(omega.total_dim(), 0);

  auto select = [&](std::span<const double> abs_z, double threshold, std::size_t offset) {
    for (std::size_t i = 0; i < abs_z.size(); ++i) {
      if (abs_z[i] > threshold) {
        mask.bits[offset + i] = 1;
        ++mask.kept_count;
      }
    }
  };

  if (cfg.scope == PercentileScope::Global) {
    std::vector<double> abs_z;
    abs_z.reserve(omega.total_dim());
    for (const auto& layer : omega.layers()) {
      for (double z : layer.values) abs_z.push_back(std::abs(z));
    }
    if (abs_z.empty()) return result;
    const double threshold = percentile_threshold(abs_z, cfg.qp);
    result.thresholds.push_back(threshold);
    select(abs_z, threshold, 0);
  } else {
    std::size_t offset = 0;
    std::vector<double> abs_z;
    for (const auto& layer : omega.layers()) {
      abs_z.assign(layer.values.size(), 0.0);
      for (std::size_t i = 0; i < abs_z.size(); ++i) abs_z[i] = std::abs(layer.values[i]);
      const double threshold = percentile_threshold(abs_z, cfg.qp);
      result.thresholds.push_back(threshold);
      select(abs_z, threshold, offset);
      offset += abs_z.size();
    }
  }
  return result;
}

GradientSet apply_mask(const GradientSet& g, const Mask& mask) {
  if (mask.size() != g.total_dim()) throw ShapeError("apply_mask: mask length does not match gradient");
  GradientSet out;
  std::size_t offset = 0;
  for (const auto& layer : g.layers()) {
    FlatVec v(layer.values.size(), 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (mask.bits[offset + i]) v[i] = layer.values[i];
    }
    offset += v.size();
    out.add(layer.id, layer.shape, std::move(v));
  }
  return out;
}

FilterOutcome filter_gradient(const GradientSet& g, const FilterConfig& cfg) {
  cfg.validate();
  FilterOutcome out;
  out.stats = layer_stats(g, cfg.sigma_eps);
  auto masked = build_mask(znormalize(g, out.stats), cfg);
  out.thresholds = std::move(masked.thresholds);
  out.mask = std::move(masked.mask);
  out.filtered = apply_mask(g, out.mask);
  out.filtered_norm = norm2(out.filtered);
  return out;
}

}  // namespace zsharp
