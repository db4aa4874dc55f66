// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include "zsharp/datasets.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <ostream>
#include <string>

#include "zsharp/core_math.hpp"
#include "zsharp/errors.hpp"
#include "zsharp/rng.hpp"

namespace zsharp {

Dataset::Dataset(std::size_t n_features, std::size_t n_classes, std::vector<double> features,
                 std::vector<int> labels)
    : n_features_(n_features), n_classes_(n_classes), features_(std::move(features)), labels_(std::move(labels)) {
  if (labels_.empty()) throw ConfigError("dataset must contain at least one sample");
  if (n_features_ == 0 || n_classes_ == 0) throw ConfigError("dataset needs at least one feature and one class");
  if (features_.size() != labels_.size() * n_features_) throw ConfigError("dataset feature matrix has wrong size");
  for (int y : labels_) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes_) {
      throw ConfigError("label " + std::to_string(y) + " outside [0, " + std::to_string(n_classes_) + ")");
    }
  }
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  std::vector<double> features;
  std::vector<int> labels;
  features.reserve(indices.size() * n_features_);
  labels.reserve(indices.size());
  for (auto i : indices) {
    auto r = row(i);
    features.insert(features.end(), r.begin(), r.end());
    labels.push_back(labels_[i]);
  }
  return Dataset(n_features_, n_classes_, std::move(features), std::move(labels));
}

namespace {

double linspace_at(std::size_t i, std::size_t count, double hi) {
  return count <= 1 ? 0.0 : hi * static_cast<double>(i) / static_cast<double>(count - 1);
}

void require_noise(double noise) {
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw ConfigError("noise must be a finite value >= 0");
}

}  // namespace

Dataset gen_two_moons(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw ConfigError("two-moons needs n >= 2");
  require_noise(noise);
  SeededRng rng(seed);
  const std::size_t n0 = n / 2;
  const std::size_t n1 = n - n0;

  std::vector<double> features;
  std::vector<int> labels;
  features.reserve(2 * n);
  labels.reserve(n);
  for (std::size_t i = 0; i < n0; ++i) {
    const double t = linspace_at(i, n0, std::numbers::pi);
    features.push_back(std::cos(t));
    features.push_back(std::sin(t));
    labels.push_back(0);
  }
  for (std::size_t i = 0; i < n1; ++i) {
    const double t = linspace_at(i, n1, std::numbers::pi);
    features.push_back(1.0 - std::cos(t));
    features.push_back(0.5 - std::sin(t));
    labels.push_back(1);
  }
  if (noise > 0.0) {
    for (auto& x : features) x += rng.gaussian(0.0, noise);
  }
  return Dataset(2, 2, std::move(features), std::move(labels));
}

Dataset gen_blobs(std::size_t n, std::size_t n_classes, double noise, std::uint64_t seed) {
  if (n < n_classes || n_classes < 2) throw ConfigError("blobs needs n_classes >= 2 and n >= n_classes");
  require_noise(noise);
  SeededRng rng(seed);
  std::vector<double> features;
  std::vector<int> labels;
  features.reserve(2 * n);
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = i % n_classes;
    const double angle = 2.0 * std::numbers::pi * static_cast<double>(c) / static_cast<double>(n_classes);
    features.push_back(3.0 * std::cos(angle) + rng.gaussian(0.0, noise));
    features.push_back(3.0 * std::sin(angle) + rng.gaussian(0.0, noise));
    labels.push_back(static_cast<int>(c));
  }
  return Dataset(2, n_classes, std::move(features), std::move(labels));
}

Dataset gen_spirals(std::size_t n, double noise, std::uint64_t seed) {
  if (n < 2) throw ConfigError("spirals needs n >= 2");
  require_noise(noise);
  SeededRng rng(seed);
  const std::size_t n0 = n / 2;
  std::vector<double> features;
  std::vector<int> labels;
  features.reserve(2 * n);
  labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int c = i < n0 ? 0 : 1;
    const std::size_t k = c == 0 ? i : i - n0;
    const std::size_t count = c == 0 ? n0 : n - n0;
    // Two turns per arm, starting just off the origin.
    const double t = 0.5 + linspace_at(k, count, 4.0 * std::numbers::pi);
    const double r = t / (4.0 * std::numbers::pi);
    const double phase = c == 0 ? 0.0 : std::numbers::pi;
    features.push_back(r * std::cos(t + phase) + rng.gaussian(0.0, noise));
    features.push_back(r * std::sin(t + phase) + rng.gaussian(0.0, noise));
    labels.push_back(c);
  }
  return Dataset(2, 2, std::move(features), std::move(labels));
}

Dataset flip_labels(const Dataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ConfigError("label flip fraction must be in [0, 1]");
  if (fraction == 0.0) return ds;
  if (ds.n_classes() < 2) throw ConfigError("label flipping needs at least two classes");
  SeededRng rng(seed);
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(ds.size())));
  const auto perm = rng.permutation(ds.size());
  std::vector<int> labels = ds.labels();
  const auto k = static_cast<std::uint64_t>(ds.n_classes());
  for (std::size_t j = 0; j < count; ++j) {
    auto& y = labels[perm[j]];
    y = static_cast<int>((static_cast<std::uint64_t>(y) + 1 + rng.below(k - 1)) % k);
  }
  return Dataset(ds.n_features(), ds.n_classes(), ds.features(), std::move(labels));
}

namespace {

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint32_t read_be32() {
    require(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v = (v << 8) | bytes_[pos_++];
    return v;
  }

  std::span<const std::uint8_t> read_bytes(std::size_t n) {
    require(n);
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

 private:
  void require(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("unexpected EOF");
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

Dataset parse_idx_pair(std::span<const std::uint8_t> images, std::span<const std::uint8_t> labels) {
  ByteReader img(images);
  if (img.read_be32() != kIdxImagesMagic) throw FormatError("not an IDX file");
  const std::size_t count = img.read_be32();
  const std::size_t rows = img.read_be32();
  const std::size_t cols = img.read_be32();

  ByteReader lab(labels);
  if (lab.read_be32() != kIdxLabelsMagic) throw FormatError("not an IDX file");
  const std::size_t label_count = lab.read_be32();
  if (label_count != count) throw FormatError("image/label count mismatch");
  if (count == 0 || rows * cols == 0) throw FormatError("IDX file has no samples");

  const auto pixels = img.read_bytes(count * rows * cols);
  const auto raw_labels = lab.read_bytes(count);

  std::vector<double> features(pixels.size());
  for (std::size_t i = 0; i < pixels.size(); ++i) features[i] = static_cast<double>(pixels[i]) / 255.0;
  std::vector<int> ys(raw_labels.begin(), raw_labels.end());
  int max_label = 0;
  for (int y : ys) max_label = std::max(max_label, y);
  return Dataset(rows * cols, static_cast<std::size_t>(max_label) + 1, std::move(features), std::move(ys));
}

Dataset load_idx_pair(const std::filesystem::path& images, const std::filesystem::path& labels) {
  const auto image_bytes = read_file(images);
  const auto label_bytes = read_file(labels);
  return parse_idx_pair(image_bytes, label_bytes);
}

Split split(const Dataset& ds, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must be in (0, 1)");
  if (ds.size() < 2) throw ConfigError("cannot split a dataset with fewer than 2 samples");
  const auto n = ds.size();
  // The small slack keeps e.g. 0.2 * 100 from rounding up to 21.
  auto n_test = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n) - 1e-9));
  n_test = std::clamp<std::size_t>(n_test, 1, n - 1);

  SeededRng rng(seed);
  const auto perm = rng.permutation(n);
  std::span<const std::size_t> all(perm);
  return Split{ds.subset(all.subspan(n_test)), ds.subset(all.first(n_test))};
}

std::vector<std::vector<std::size_t>> minibatches(std::size_t n, const BatchPlan& plan, std::size_t epoch) {
  if (plan.batch_size == 0) throw ConfigError("batch size must be at least 1");
  SeededRng rng(derive_seed(plan.shuffle_seed, epoch));
  const auto perm = rng.permutation(n);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += plan.batch_size) {
    const auto stop = std::min(n, start + plan.batch_size);
    if (plan.drop_last && stop - start < plan.batch_size) break;
    batches.emplace_back(perm.begin() + static_cast<std::ptrdiff_t>(start),
                         perm.begin() + static_cast<std::ptrdiff_t>(stop));
  }
  return batches;
}

void write_csv(std::ostream& out, const Dataset& ds) {
  for (std::size_t j = 0; j < ds.n_features(); ++j) out << 'x' << j << ',';
  out << "label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (double x : ds.row(i)) out << format_double(x) << ',';
    out << ds.label(i) << '\n';
  }
}

void write_csv(const std::filesystem::path& path, const Dataset& ds) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  write_csv(out, ds);
}

}  // namespace zsharp
