// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "zsharp/run_config.hpp"

namespace zsharp {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct EpochMetrics {
  std::size_t epoch = 0;
  /// Mean of minibatch losses, each taken at the pre-step weights.
  double train_loss = 0.0;
  double test_acc = 0.0;
  /// Mean norm of the first-phase gradient over the epoch's steps.
  double grad_norm = 0.0;
  std::optional<double> kept_fraction;  // ZSharp only
  std::optional<double> sharpness;
};

struct RunSummary {
  double final_train_loss = 0.0;
  double final_test_acc = 0.0;
  double final_train_acc = 0.0;
  std::optional<double> final_sharpness;
  std::optional<double> mean_kept_fraction;
  std::uint64_t init_param_hash = 0;
  std::uint64_t final_param_hash = 0;
};

struct RunResult {
  RunConfig config;
  std::vector<EpochMetrics> epochs;
  RunSummary summary;
  ParamSet final_params;
  double wall_seconds = 0.0;
  /// Set when training stopped on a non-finite value; metrics up to the
  /// failure are kept.
  std::optional<std::string> error;

  bool ok() const noexcept { return !error.has_value(); }
};

/// L(w + eps) - L(w), eps the SAM perturbation of radius rho built from the
/// gradient of `loss_fn` at `w`.
double sharpness_probe(const LossFn& loss_fn, const ParamSet& w, double rho, double delta = 1e-8);

/// Full training loop. Deterministic in `cfg`; throws ConfigError for bad
/// configs, records divergence in RunResult::error.
RunResult train(const RunConfig& cfg);

/// Runs `count` independent tasks on up to `jobs` threads. Task i's result
/// lands in slot i regardless of completion order.
void run_parallel(std::size_t count, std::size_t jobs, const std::function<void(std::size_t)>& task);

struct Aggregate {
  double mean = 0.0;
  double std = 0.0;  // population std
};
Aggregate aggregate(const std::vector<double>& values);

struct SweepRow {
  double qp = 0.0;
  std::size_t runs_ok = 0;
  std::size_t runs_failed = 0;
  Aggregate test_acc;
  Aggregate train_loss;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // in the order of the requested qp values
  /// runs[i * seeds + j] is qp i, seed j.
  std::vector<RunResult> runs;
};

/// Cross product qp x seed of ZSharp runs derived from `base`.
SweepResult sweep_qp(const RunConfig& base, const std::vector<double>& qp_values,
                     const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

struct CompareRow {
  OptimizerKind method = OptimizerKind::Base;
  std::size_t runs_ok = 0;
  std::size_t runs_failed = 0;
  Aggregate test_acc;
  Aggregate train_loss;
  Aggregate sharpness;
  std::optional<double> mean_kept_fraction;
};

struct CompareResult {
  std::uint64_t shared_config_hash = 0;
  std::vector<CompareRow> rows;
  /// runs[i * seeds + j] is method i, seed j.
  std::vector<RunResult> runs;
};

/// Same-seed runs of each method. Throws std::logic_error if paired runs do
/// not start from the same parameters.
CompareResult compare_methods(const RunConfig& base, const std::vector<OptimizerKind>& methods,
                              const std::vector<std::uint64_t>& seeds, std::size_t jobs = 1);

// Output formats. Numbers are shortest round-trip decimals; absent values
// are empty CSV fields.

/// Header: epoch,train_loss,test_acc,grad_norm,kept_fraction,sharpness
void write_metrics_csv(std::ostream& out, const RunResult& result);
/// JSON object: config (nested by dot path), seed, library version,
/// wall clock, status and summary.
void write_manifest(std::ostream& out, const RunResult& result);
/// Writes `metrics.csv` and `manifest` into `dir`.
void write_run_artifacts(const std::filesystem::path& dir, const RunResult& result);

/// Header: qp,runs,failed,mean_test_acc,std_test_acc,mean_train_loss,std_train_loss
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
/// Header: method,runs,failed,mean_test_acc,std_test_acc,mean_train_loss,
/// std_train_loss,mean_sharpness,std_sharpness,mean_kept_fraction,config_hash
void write_compare_csv(std::ostream& out, const CompareResult& cmp);

}  // namespace zsharp
