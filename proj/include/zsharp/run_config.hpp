// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "zsharp/datasets.hpp"
#include "zsharp/model.hpp"
#include "zsharp/optimizers.hpp"
#include "zsharp/sam.hpp"

namespace zsharp {

enum class OptimizerKind { Base, Sam, ZSharp };
enum class BaseKind { AdamW, Sgd };

std::string_view to_string(OptimizerKind kind);
std::string_view to_string(BaseKind kind);
OptimizerKind parse_optimizer_kind(std::string_view text);

struct DataSpec {
  std::string generator = "two-moons";  // two-moons | blobs | spirals | idx
  std::size_t n = 400;
  double noise = 0.1;
  std::size_t classes = 3;  // blobs only
  double label_flip = 0.0;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  std::filesystem::path idx_images;
  std::filesystem::path idx_labels;
};

struct RunConfig {
  DataSpec data;
  std::vector<std::size_t> hidden_dims{32, 32};

  OptimizerKind kind = OptimizerKind::ZSharp;
  BaseKind base = BaseKind::AdamW;
  AdamWConfig adamw;
  SgdConfig sgd;
  LrSchedule schedule = LrSchedule::step_decay(1e-3, 0.75, 10);
  /// Present iff kind is Sam or ZSharp; carries a filter iff ZSharp.
  std::optional<AscentConfig> ascent = AscentConfig::zsharp(0.05, FilterConfig{});

  std::size_t epochs = 50;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  /// Radius of the flatness probe, shared by every method.
  double probe_rho = 0.05;
  /// Probe every k-th epoch; 0 probes only the final epoch.
  std::size_t probe_every = 1;
  bool drop_last = false;

  void validate() const;
};

/// Switches `cfg` to another optimizer kind. Sam and ZSharp reuse the
/// existing radius. ZSharp uses `filter` when given, else the existing
/// filter, else the defaults.
RunConfig with_kind(RunConfig cfg, OptimizerKind kind, const std::optional<FilterConfig>& filter = std::nullopt);

/// Canonical flat `key = value` view of a config, in a fixed key order.
/// Ascent keys are omitted for Base runs and filter keys for non-ZSharp
/// runs.
std::vector<std::pair<std::string, std::string>> describe(const RunConfig& cfg);

/// FNV-1a over `describe(cfg)`, skipping any key listed in `exclude`.
std::uint64_t config_hash(const RunConfig& cfg, const std::vector<std::string>& exclude = {});

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Collects dot-path settings (from a config file and then from flags) and
/// turns them into a validated RunConfig. Unknown keys are errors.
class ConfigBuilder {
 public:
  ConfigBuilder();

  static const std::vector<ConfigKey>& keys();

  /// Throws ConfigError for unknown keys.
  void set(const std::string& key, const std::string& value);
  /// Parses `key = value` lines; `#` starts a comment.
  void parse_text(std::string_view text, const std::string& source = "config");
  void load_file(const std::filesystem::path& path);

  const std::map<std::string, std::string>& values() const noexcept { return values_; }

  /// Throws ConfigError naming the offending key.
  RunConfig build() const;

 private:
  std::map<std::string, std::string> values_;
};

/// Data preparation for a run: generate or load, flip labels, split.
Split prepare_data(const DataSpec& spec);

MlpSpec model_spec(const RunConfig& cfg, const Dataset& train);

}  // namespace zsharp
