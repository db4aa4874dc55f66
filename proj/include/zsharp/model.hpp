// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "zsharp/datasets.hpp"
#include "zsharp/layer_set.hpp"
#include "zsharp/sam.hpp"

namespace zsharp {

enum class Activation { ReLU };

/// Fully connected ReLU classifier. Parameters enumerate as
/// [fc1.weight, fc1.bias, fc2.weight, fc2.bias, ...]; weights are
/// (out x in) row-major.
struct MlpSpec {
  std::size_t input_dim = 2;
  std::vector<std::size_t> hidden_dims{32, 32};
  std::size_t n_classes = 2;
  Activation activation = Activation::ReLU;
  std::uint64_t init_seed = 0;

  void validate() const;
  /// Layer widths including input and output: [input, hidden..., classes].
  std::vector<std::size_t> widths() const;
  std::size_t param_count() const;
};

/// He-normal weights N(0, 2 / fan_in) and zero biases.
ParamSet init_params(const MlpSpec& spec);

/// Class scores for one input row.
std::vector<double> logits(const MlpSpec& spec, const ParamSet& params, std::span<const double> x);

/// Mean softmax cross-entropy over `indices` of `data`, with gradients from
/// backpropagation. Throws NumericError on a non-finite result.
LossAndGrad loss_and_grad(const MlpSpec& spec, const ParamSet& params, const Dataset& data,
                          std::span<const std::size_t> indices);
LossAndGrad loss_and_grad(const MlpSpec& spec, const ParamSet& params, const Dataset& data);

/// Mean cross-entropy without gradients.
double loss_only(const MlpSpec& spec, const ParamSet& params, const Dataset& data);

/// Argmax prediction; ties go to the lowest class index.
int predict(const MlpSpec& spec, const ParamSet& params, std::span<const double> x);
double predict_accuracy(const MlpSpec& spec, const ParamSet& params, const Dataset& data);

/// Binds a model and a fixed batch into a LossFn.
LossFn make_loss_fn(const MlpSpec& spec, const Dataset& data, std::vector<std::size_t> indices);
LossFn make_loss_fn(const MlpSpec& spec, const Dataset& data);

/// FNV-1a over ids, shapes and the raw bytes of every value.
std::uint64_t param_hash(const ParamSet& params);

}  // namespace zsharp
