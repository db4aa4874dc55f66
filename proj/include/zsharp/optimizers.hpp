// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>

#include "zsharp/layer_set.hpp"

namespace zsharp {

/// The descent-phase optimizer O in w <- w - lr * O(g).
class BaseOptimizer {
 public:
  virtual ~BaseOptimizer() = default;

  /// Updates `w` in place from gradient `g` at learning rate `lr`.
  virtual void step(ParamSet& w, const GradientSet& g, double lr) = 0;
  virtual std::string name() const = 0;
  virtual std::unique_ptr<BaseOptimizer> clone() const = 0;
};

struct SgdConfig {
  double momentum = 0.0;
  double weight_decay = 0.0;  // coupled L2, added to the gradient
};

/// Plain SGD with optional heavy-ball momentum.
class Sgd final : public BaseOptimizer {
 public:
  explicit Sgd(SgdConfig cfg = {}) : cfg_(cfg) {}

  void step(ParamSet& w, const GradientSet& g, double lr) override;
  std::string name() const override { return "sgd"; }
  std::unique_ptr<BaseOptimizer> clone() const override { return std::make_unique<Sgd>(*this); }

 private:
  SgdConfig cfg_;
  std::optional<GradientSet> velocity_;
};

struct AdamWConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 5e-5;
};

/// Moment accumulators for AdamW; created lazily on the first step.
struct AdamWState {
  GradientSet m;
  GradientSet v;
  std::uint64_t t = 0;
};

/// One AdamW update with decoupled weight decay:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   w <- w - lr (m_hat / (sqrt(v_hat) + eps) + wd w).
/// `state.m`/`state.v` are zero-initialized if empty.
void adamw_step(AdamWState& state, const AdamWConfig& cfg, ParamSet& w, const GradientSet& g, double lr);

class AdamW final : public BaseOptimizer {
 public:
  explicit AdamW(AdamWConfig cfg = {}) : cfg_(cfg) {}

  void step(ParamSet& w, const GradientSet& g, double lr) override { adamw_step(state_, cfg_, w, g, lr); }
  std::string name() const override { return "adamw"; }
  std::unique_ptr<BaseOptimizer> clone() const override { return std::make_unique<AdamW>(*this); }

  const AdamWState& state() const noexcept { return state_; }
  const AdamWConfig& config() const noexcept { return cfg_; }

 private:
  AdamWConfig cfg_;
  AdamWState state_;
};

/// Constant or step-decay learning rate, evaluated per epoch.
struct LrSchedule {
  enum class Kind { Constant, StepDecay };

  Kind kind = Kind::Constant;
  double base_lr = 1e-3;
  double factor = 1.0;
  std::size_t every_n_epochs = 1;

  static LrSchedule constant(double lr) { return {Kind::Constant, lr, 1.0, 1}; }
  static LrSchedule step_decay(double base_lr, double factor, std::size_t every) {
    return {Kind::StepDecay, base_lr, factor, every};
  }

  void validate() const;
};

/// base_lr * factor^floor(epoch / every_n_epochs) for StepDecay.
double lr_at(const LrSchedule& schedule, std::size_t epoch);

}  // namespace zsharp
