// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "zsharp/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <string>

#include "zsharp/errors.hpp"
#include "zsharp/rng.hpp"

namespace zsharp {

void MlpSpec::validate() const {
  if (input_dim == 0 || n_classes == 0) throw ConfigError("model dimensions must be >= 1");
  for (auto h : hidden_dims) {
    if (h == 0) throw ConfigError("model hidden widths must be >= 1");
  }
}

std::vector<std::size_t> MlpSpec::widths() const {
  std::vector<std::size_t> w{input_dim};
  w.insert(w.end(), hidden_dims.begin(), hidden_dims.end());
  w.push_back(n_classes);
  return w;
}

std::size_t MlpSpec::param_count() const {
  const auto w = widths();
  std::size_t count = 0;
  for (std::size_t l = 0; l + 1 < w.size(); ++l) count += w[l + 1] * w[l] + w[l + 1];
  return count;
}

ParamSet init_params(const MlpSpec& spec) {
  spec.validate();
  SeededRng rng(spec.init_seed);
  const auto widths = spec.widths();
  ParamSet params;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto fan_in = widths[l];
    const auto fan_out = widths[l + 1];
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    FlatVec weight(fan_out * fan_in);
    for (auto& x : weight) x = rng.gaussian(0.0, stddev);
    const auto name = "fc" + std::to_string(l + 1);
    params.add(name + ".weight", {fan_out, fan_in}, std::move(weight));
    params.add(name + ".bias", {fan_out}, FlatVec(fan_out, 0.0));
  }
  return params;
}

namespace {

// Forward buffers for one sample: pre-activations z[l] and activations a[l]
// (a[0] is the input, a[L] the logits).
struct Workspace {
  std::vector<std::vector<double>> z;
  std::vector<std::vector<double>> a;
  std::vector<double> delta;
  std::vector<double> delta_prev;
};

void check_params(const MlpSpec& spec, const ParamSet& params) {
  const auto widths = spec.widths();
  if (params.num_layers() != 2 * (widths.size() - 1)) throw ShapeError("parameter set does not match model spec");
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const std::vector<std::size_t> wshape{widths[l + 1], widths[l]};
    const std::vector<std::size_t> bshape{widths[l + 1]};
    if (params.layer(2 * l).shape != wshape || params.layer(2 * l + 1).shape != bshape) {
      throw ShapeError("parameter set does not match model spec");
    }
  }
}

void forward(const ParamSet& params, std::span<const double> x, Workspace& ws) {
  const std::size_t n_layers = params.num_layers() / 2;
  ws.a.resize(n_layers + 1);
  ws.z.resize(n_layers + 1);
  ws.a[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < n_layers; ++l) {
    const auto& weight = params.layer(2 * l);
    const auto& bias = params.values(2 * l + 1);
    const std::size_t out = weight.shape[0];
    const std::size_t in = weight.shape[1];
    const double* wrow = weight.values.data();
    const auto& input = ws.a[l];
    auto& z = ws.z[l + 1];
    z.resize(out);
    for (std::size_t o = 0; o < out; ++o, wrow += in) {
      double sum = bias[o];
      for (std::size_t i = 0; i < in; ++i) sum += wrow[i] * input[i];
      z[o] = sum;
    }
    auto& a = ws.a[l + 1];
    if (l + 1 < n_layers) {
      a.resize(out);
      for (std::size_t o = 0; o < out; ++o) a[o] = z[o] > 0.0 ? z[o] : 0.0;
    } else {
      a = z;
    }
  }
}

// Softmax cross-entropy with max shift. Writes softmax(z) - onehot(y) into
// `dlogits` and returns the loss.
double softmax_xent(std::span<const double> z, int y, std::vector<double>& dlogits) {
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  dlogits.resize(z.size());
  for (std::size_t k = 0; k < z.size(); ++k) {
    dlogits[k] = std::exp(z[k] - zmax);
    sum += dlogits[k];
  }
  for (auto& p : dlogits) p /= sum;
  const auto label = static_cast<std::size_t>(y);
  dlogits[label] -= 1.0;
  return std::log(sum) + zmax - z[label];
}

}  // namespace

std::vector<double> logits(const MlpSpec& spec, const ParamSet& params, std::span<const double> x) {
  check_params(spec, params);
  if (x.size() != spec.input_dim) throw ShapeError("input has wrong feature count");
  Workspace ws;
  forward(params, x, ws);
  return ws.a.back();
}

LossAndGrad loss_and_grad(const MlpSpec& spec, const ParamSet& params, const Dataset& data,
                          std::span<const std::size_t> indices) {
  check_params(spec, params);
  if (indices.empty()) throw ConfigError("batch must not be empty");
  if (data.n_features() != spec.input_dim) throw ShapeError("dataset feature count does not match model input");
  if (data.n_classes() > spec.n_classes) throw ShapeError("dataset has more classes than the model");

  const std::size_t n_layers = params.num_layers() / 2;
  LossAndGrad out;
  out.grad = GradientSet::zeros_like(params);
  Workspace ws;
  double total = 0.0;

  for (auto idx : indices) {
    forward(params, data.row(idx), ws);
    total += softmax_xent(ws.a.back(), data.label(idx), ws.delta);

    for (std::size_t l = n_layers; l-- > 0;) {
      const auto& weight = params.layer(2 * l);
      const std::size_t out_dim = weight.shape[0];
      const std::size_t in_dim = weight.shape[1];
      const auto& input = ws.a[l];
      double* gw = out.grad.values(2 * l).data();
      double* gb = out.grad.values(2 * l + 1).data();
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double d = ws.delta[o];
        gb[o] += d;
        double* grow = gw + o * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) grow[i] += d * input[i];
      }
      if (l == 0) break;

      // Propagate through W^T and the ReLU of the previous layer; the
      // subgradient at exactly zero is taken as zero.
      ws.delta_prev.assign(in_dim, 0.0);
      const double* wv = weight.values.data();
      for (std::size_t o = 0; o < out_dim; ++o) {
        const double d = ws.delta[o];
        const double* wrow = wv + o * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) ws.delta_prev[i] += wrow[i] * d;
      }
      const auto& z_prev = ws.z[l];
      for (std::size_t i = 0; i < in_dim; ++i) {
        if (!(z_prev[i] > 0.0)) ws.delta_prev[i] = 0.0;
      }
      std::swap(ws.delta, ws.delta_prev);
    }
  }

  const double inv_n = 1.0 / static_cast<double>(indices.size());
  out.loss = total * inv_n;
  for (std::size_t l = 0; l < out.grad.num_layers(); ++l) {
    for (auto& g : out.grad.values(l)) g *= inv_n;
  }
  if (!std::isfinite(out.loss) || !all_finite(out.grad)) throw NumericError("non-finite loss or gradient");
  return out;
}

LossAndGrad loss_and_grad(const MlpSpec& spec, const ParamSet& params, const Dataset& data) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return loss_and_grad(spec, params, data, all);
}

double loss_only(const MlpSpec& spec, const ParamSet& params, const Dataset& data) {
  check_params(spec, params);
  Workspace ws;
  std::vector<double> scratch;
  double total = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    forward(params, data.row(i), ws);
    total += softmax_xent(ws.a.back(), data.label(i), scratch);
  }
  const double loss = total / static_cast<double>(data.size());
  if (!std::isfinite(loss)) throw NumericError("non-finite loss");
  return loss;
}

int predict(const MlpSpec& spec, const ParamSet& params, std::span<const double> x) {
  const auto z = logits(spec, params, x);
  // max_element returns the first maximum, i.e. the lowest index on ties.
  return static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
}

double predict_accuracy(const MlpSpec& spec, const ParamSet& params, const Dataset& data) {
  check_params(spec, params);
  Workspace ws;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    forward(params, data.row(i), ws);
    const auto& z = ws.a.back();
    const auto pred = static_cast<int>(std::max_element(z.begin(), z.end()) - z.begin());
    if (pred == data.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

LossFn make_loss_fn(const MlpSpec& spec, const Dataset& data, std::vector<std::size_t> indices) {
  return [&spec, &data, indices = std::move(indices)](const ParamSet& w) {
    return loss_and_grad(spec, w, data, indices);
  };
}

LossFn make_loss_fn(const MlpSpec& spec, const Dataset& data) {
  return [&spec, &data](const ParamSet& w) { return loss_and_grad(spec, w, data); };
}

std::uint64_t param_hash(const ParamSet& params) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](std::uint64_t word) {
    for (int b = 0; b < 8; ++b) {
      h ^= (word >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  for (const auto& layer : params.layers()) {
    for (char c : layer.id) mix(static_cast<unsigned char>(c));
    for (auto d : layer.shape) mix(d);
    for (double x : layer.values) mix(std::bit_cast<std::uint64_t>(x));
  }
  return h;
}

}  // namespace zsharp
