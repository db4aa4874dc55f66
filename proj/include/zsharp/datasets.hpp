// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace zsharp {

/// Row-major n x m feature matrix with integer class labels.
class Dataset {
 public:
  Dataset() = default;
  /// Throws ConfigError if sizes disagree, n == 0, or a label is out of range.
  Dataset(std::size_t n_features, std::size_t n_classes, std::vector<double> features, std::vector<int> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t n_features() const noexcept { return n_features_; }
  std::size_t n_classes() const noexcept { return n_classes_; }

  std::span<const double> row(std::size_t i) const {
    return {features_.data() + i * n_features_, n_features_};
  }
  int label(std::size_t i) const { return labels_[i]; }

  const std::vector<double>& features() const noexcept { return features_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  /// Rows `indices` in the given order.
  Dataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::size_t n_features_ = 0;
  std::size_t n_classes_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
};

/// Two interleaved half circles: class 0 on the upper unit half circle,
/// class 1 on the shifted lower one. Class 0 gets n/2 points, class 1 the
/// rest; isotropic Gaussian noise with std `noise`.
Dataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed);

/// Gaussian blobs around `n_classes` centres evenly spaced on a circle of
/// radius 3.
Dataset gen_blobs(std::size_t n, std::size_t n_classes, double noise, std::uint64_t seed);

/// Two interleaved Archimedean spiral arms.
Dataset gen_spirals(std::size_t n, double noise, std::uint64_t seed);

/// Reassigns floor(fraction * n) randomly chosen labels to a different class.
Dataset flip_labels(const Dataset& ds, double fraction, std::uint64_t seed);

/// Loads an IDX image file (magic 0x00000803, u8 pixels scaled to [0, 1])
/// and its IDX label file (magic 0x00000801). Throws FormatError with
/// "not an IDX file", "image/label count mismatch" or "unexpected EOF".
Dataset load_idx_pair(const std::filesystem::path& images, const std::filesystem::path& labels);
Dataset parse_idx_pair(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels);

/// Seeded permutation, then the first ceil(test_fraction * n) rows become
/// the test set. Both parts are non-empty when n >= 2.
struct Split {
  Dataset train;
  Dataset test;
};
Split split(const Dataset& ds, double test_fraction, std::uint64_t seed);

struct BatchPlan {
  std::size_t batch_size = 32;
  std::uint64_t shuffle_seed = 0;
  bool drop_last = false;
};

/// Index batches for one epoch. The permutation depends only on
/// (shuffle_seed, epoch).
std::vector<std::vector<std::size_t>> minibatches(std::size_t n, const BatchPlan& plan, std::size_t epoch);

/// CSV with header `x0,...,x{m-1},label`, one row per sample.
void write_csv(std::ostream& out, const Dataset& ds);
void write_csv(const std::filesystem::path& path, const Dataset& ds);

}  // namespace zsharp
