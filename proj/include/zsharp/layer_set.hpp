// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "zsharp/core_math.hpp"
#include "zsharp/errors.hpp"

namespace zsharp {

/// One named tensor, stored row-major.
struct Layer {
  std::string id;
  std::vector<std::size_t> shape;
  FlatVec values;

  bool operator==(const Layer&) const = default;
};

/// An ordered list of named tensors. The layer order defines the flattening
/// used for global percentiles and masks. `Tag` keeps parameters and
/// gradients as distinct types that still share a shape vocabulary.
template <typename Tag>
class LayerSet {
 public:
  LayerSet() = default;

  /// Appends a tensor; the product of `shape` must equal `values.size()`.
  void add(std::string id, std::vector<std::size_t> shape, FlatVec values) {
    std::size_t count = 1;
    for (auto d : shape) count *= d;
    if (count != values.size()) {
      throw ShapeError("layer '" + id + "': shape does not match value count");
    }
    total_dim_ += values.size();
    layers_.push_back(Layer{std::move(id), std::move(shape), std::move(values)});
  }

  /// Single rank-1 layer wrapping `values`.
  static LayerSet single(std::string id, FlatVec values) {
    LayerSet set;
    auto n = values.size();
    set.add(std::move(id), {n}, std::move(values));
    return set;
  }

  /// Same ids and shapes as `other`, all values zero.
  template <typename OtherTag>
  static LayerSet zeros_like(const LayerSet<OtherTag>& other) {
    LayerSet set;
    for (const auto& layer : other.layers()) {
      set.add(layer.id, layer.shape, FlatVec(layer.values.size(), 0.0));
    }
    return set;
  }

  std::size_t num_layers() const noexcept { return layers_.size(); }
  std::size_t total_dim() const noexcept { return total_dim_; }

  const std::vector<Layer>& layers() const noexcept { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  FlatVec& values(std::size_t i) { return layers_.at(i).values; }
  const FlatVec& values(std::size_t i) const { return layers_.at(i).values; }

  /// Concatenation of every layer in order.
  FlatVec flatten() const {
    std::vector<double> out;
    out.reserve(total_dim_);
    for (const auto& layer : layers_) out.insert(out.end(), layer.values.begin(), layer.values.end());
    return FlatVec(std::move(out));
  }

  template <typename OtherTag>
  bool same_shape(const LayerSet<OtherTag>& other) const {
    if (num_layers() != other.num_layers()) return false;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].shape != other.layer(i).shape) return false;
    }
    return true;
  }

  template <typename OtherTag>
  void require_same_shape(const LayerSet<OtherTag>& other, const char* what) const {
    if (!same_shape(other)) throw ShapeError(std::string(what) + ": shape mismatch");
  }

  bool operator==(const LayerSet&) const = default;

 private:
  std::vector<Layer> layers_;
  std::size_t total_dim_ = 0;
};

struct ParamTag {};
struct GradTag {};

/// Model weights w, one tensor per trainable parameter.
using ParamSet = LayerSet<ParamTag>;
/// Per-layer gradient slices mirroring a ParamSet.
using GradientSet = LayerSet<GradTag>;

/// Norm over the flattened set, summed in layer order.
template <typename Tag>
double norm2(const LayerSet<Tag>& set) {
  double sum = 0.0;
  for (const auto& layer : set.layers()) {
    for (double x : layer.values) sum += x * x;
  }
  return std::sqrt(sum);
}

template <typename Tag>
bool all_finite(const LayerSet<Tag>& set) {
  for (const auto& layer : set.layers()) {
    if (!all_finite(layer.values.span())) return false;
  }
  return true;
}

/// Relabels a set's tag, keeping ids, shapes and values.
template <typename To, typename From>
LayerSet<To> retag(const LayerSet<From>& from) {
  LayerSet<To> out;
  for (const auto& layer : from.layers()) out.add(layer.id, layer.shape, layer.values);
  return out;
}

}  // namespace zsharp
