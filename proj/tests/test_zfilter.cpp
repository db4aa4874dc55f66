// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "test_util.hpp"
#include "zsharp/errors.hpp"
#include "zsharp/zfilter.hpp"

using namespace zsharp;
using zsharp::testing::gaussian_grads;

namespace {

GradientSet two_layers(FlatVec a, FlatVec b) {
  GradientSet g;
  const auto na = a.size();
  const auto nb = b.size();
  g.add("a", {na}, std::move(a));
  g.add("b", {nb}, std::move(b));
  return g;
}

// Reference mask: sort every |z| and keep entries strictly above the
// nearest-rank threshold.
std::vector<std::uint8_t> reference_mask(const GradientSet& g, double qp) {
  std::vector<double> absz;
  for (const auto& layer : g.layers()) {
    const auto& v = layer.values;
    const double n = static_cast<double>(v.size());
    double mu = 0.0;
    for (double x : v) mu += x;
    mu /= n;
    double var = 0.0;
    for (double x : v) var += (x - mu) * (x - mu);
    const double sigma = std::sqrt(var / n);
    for (double x : v) absz.push_back(sigma < 1e-12 ? 0.0 : std::abs((x - mu) / sigma));
  }
  auto sorted = absz;
  std::sort(sorted.begin(), sorted.end());
  const auto k = static_cast<std::size_t>(std::floor(qp * static_cast<double>(sorted.size())));
  std::vector<std::uint8_t> bits(absz.size(), 1);
  if (k == 0) return bits;
  const double t = sorted[k - 1];
  for (std::size_t i = 0; i < absz.size(); ++i) bits[i] = absz[i] > t ? 1 : 0;
  return bits;
}

}  // namespace

TEST_CASE("layer_stats examples") {
  auto s = layer_stats(GradientSet::single("w", FlatVec{1, 2, 3}));
  CHECK(s[0].mu == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s[0].sigma == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));
  CHECK_FALSE(s[0].degenerate);

  s = layer_stats(GradientSet::single("w", FlatVec{0, 0, 0, 0}));
  CHECK(s[0].mu == 0.0);
  CHECK(s[0].sigma == 0.0);
  CHECK(s[0].degenerate);

  s = layer_stats(GradientSet::single("w", FlatVec{5}));
  CHECK(s[0].mu == 5.0);
  CHECK(s[0].sigma == 0.0);
  CHECK(s[0].degenerate);
}

TEST_CASE("layer_stats rejects empty layers") {
  GradientSet g;
  g.add("empty", {0}, FlatVec{});
  CHECK_THROWS_AS(layer_stats(g), ConfigError);
}

TEST_CASE("znormalize examples") {
  const auto g = GradientSet::single("w", FlatVec{1, 2, 3});
  const auto z = znormalize(g, layer_stats(g));
  CHECK(z.values(0)[0] == doctest::Approx(-1.224745).epsilon(1e-6));
  CHECK(z.values(0)[1] == 0.0);
  CHECK(z.values(0)[2] == doctest::Approx(1.224745).epsilon(1e-6));

  const auto d = GradientSet::single("w", FlatVec{4, 4});
  CHECK(znormalize(d, layer_stats(d)).values(0) == FlatVec{0, 0});

  CHECK_THROWS_AS(znormalize(two_layers({1, 2}, {3, 4}), layer_stats(g)), ShapeError);
}

TEST_CASE("Z-scores have zero mean and unit population std") {
  SeededRng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 2 + rng.below(300);
    auto g = gaussian_grads(rng, {d}, std::exp(rng.gaussian(0.0, 3.0)));
    for (auto& x : g.values(0)) x += rng.gaussian(0.0, 5.0);
    const auto z = znormalize(g, layer_stats(g)).values(0);
    double mean = 0.0;
    for (double x : z) mean += x;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double x : z) var += (x - mean) * (x - mean);
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(std::sqrt(var / static_cast<double>(d)) - 1.0) < 1e-10);
  }
}

TEST_CASE("build_mask examples") {
  const auto omega = GradientSet::single("z", FlatVec{0.1, 2.0, 0.5, 1.5, 0.2});
  const auto r = build_mask(omega, FilterConfig{0.8});
  REQUIRE(r.thresholds.size() == 1);
  CHECK(r.thresholds[0] == 1.5);
  CHECK(r.mask.bits == std::vector<std::uint8_t>{0, 1, 0, 0, 0});
  CHECK(r.mask.kept_count == 1);

  const auto all = build_mask(omega, FilterConfig{0.0});
  CHECK(all.mask.kept_count == 5);

  const auto tie = build_mask(GradientSet::single("z", FlatVec{1.0, -1.0, 1.0, -1.0}), FilterConfig{0.5});
  CHECK(tie.mask.kept_count == 0);
}

TEST_CASE("filter_gradient examples") {
  SUBCASE("full tie across layers") {
    const auto out = filter_gradient(two_layers({10, 0}, {1, 3}), FilterConfig{0.5});
    CHECK(out.mask.kept_count == 0);
    CHECK(out.filtered_norm == 0.0);
    CHECK(out.filtered.flatten() == FlatVec{0, 0, 0, 0});
  }
  SUBCASE("qp = 0 is the identity") {
    SeededRng rng(1);
    const auto g = gaussian_grads(rng, {5, 7, 3});
    const auto out = filter_gradient(g, FilterConfig{0.0});
    CHECK(out.filtered == g);
    CHECK(out.mask.kept_count == g.total_dim());
  }
  SUBCASE("d = 100, qp = 0.95 keeps 5 original entries") {
    SeededRng rng(2);
    const auto g = gaussian_grads(rng, {100});
    const auto out = filter_gradient(g, FilterConfig{0.95});
    CHECK(out.mask.kept_count == 5);
    CHECK(out.mask.bits == reference_mask(g, 0.95));
    const auto& f = out.filtered.values(0);
    for (std::size_t i = 0; i < 100; ++i) {
      if (f[i] != 0.0) CHECK(f[i] == g.values(0)[i]);
    }
  }
}

TEST_CASE("filter outcome invariants") {
  SeededRng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const auto g = gaussian_grads(rng, {1 + rng.below(20), 1 + rng.below(20), 1 + rng.below(20)});
    const FilterConfig cfg{rng.uniform() * 0.99, trial % 2 ? PercentileScope::PerLayer : PercentileScope::Global};
    const auto out = filter_gradient(g, cfg);
    const auto gf = g.flatten();
    const auto ff = out.filtered.flatten();
    std::size_t ones = 0;
    for (std::size_t i = 0; i < gf.size(); ++i) {
      CHECK(ff[i] == gf[i] * static_cast<double>(out.mask.bits[i]));
      ones += out.mask.bits[i];
    }
    CHECK(out.mask.kept_count == ones);
    CHECK(out.filtered_norm == norm2(out.filtered));
    CHECK(out.filtered_norm <= norm2(g));
    // Re-applying the same mask is idempotent.
    CHECK(apply_mask(out.filtered, out.mask) == out.filtered);
  }
}

TEST_CASE("global mask matches the brute-force reference") {
  SeededRng rng(41);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<std::size_t> sizes;
    std::size_t total = 0;
    while (total < 64) {
      const std::size_t s = 1 + rng.below(16);
      if (total + s > 64) break;
      sizes.push_back(s);
      total += s;
    }
    auto g = gaussian_grads(rng, sizes);
    if (trial % 4 == 0) {
      for (auto& x : g.values(0)) x = 2.5;  // degenerate layer
    }
    if (trial % 5 == 0) {
      for (std::size_t l = 0; l < g.num_layers(); ++l) {
        for (auto& x : g.values(l)) x = std::round(x);  // ties
      }
    }
    const double qp = rng.uniform() * 0.999;
    const auto out = filter_gradient(g, FilterConfig{qp});
    CHECK(out.mask.bits == reference_mask(g, qp));

    // Kept bits sit strictly above the threshold, dropped bits at or below.
    const auto z = znormalize(g, out.stats).flatten();
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (out.mask.bits[i]) {
        CHECK(std::abs(z[i]) > out.thresholds[0]);
      } else {
        CHECK(std::abs(z[i]) <= out.thresholds[0]);
      }
    }
  }
}

TEST_CASE("tie-free global masks keep d - floor(qp d)") {
  SeededRng rng(51);
  for (std::size_t d : {10u, 37u, 100u, 1000u}) {
    for (double qp : {0.0, 0.5, 0.75, 0.8, 0.85, 0.9, 0.95}) {
      const auto g = gaussian_grads(rng, {d / 2, d - d / 2});
      const auto out = filter_gradient(g, FilterConfig{qp});
      CHECK(out.mask.kept_count == d - static_cast<std::size_t>(std::floor(qp * static_cast<double>(d))));
      CHECK(std::abs(out.mask.kept_fraction() - (1.0 - qp)) <= 2.0 / static_cast<double>(d));
    }
  }
}

TEST_CASE("selection is invariant under per-layer affine maps") {
  SeededRng rng(61);
  for (int trial = 0; trial < 200; ++trial) {
    const auto g = gaussian_grads(rng, {3 + rng.below(30), 3 + rng.below(30)});
    auto h = g;
    for (std::size_t l = 0; l < h.num_layers(); ++l) {
      const double a = std::exp(rng.gaussian());
      const double c = rng.gaussian(0.0, 3.0);
      for (auto& x : h.values(l)) x = a * x + c;
    }
    for (auto scope : {PercentileScope::Global, PercentileScope::PerLayer}) {
      const FilterConfig cfg{0.8, scope};
      const auto mg = filter_gradient(g, cfg).mask;
      const auto mh = filter_gradient(h, cfg).mask;
      std::size_t diff = 0;
      for (std::size_t i = 0; i < mg.bits.size(); ++i) diff += mg.bits[i] != mh.bits[i];
      CHECK(diff == 0);
      CHECK(mg.kept_count == mh.kept_count);
    }
  }
}

TEST_CASE("per-layer scope thresholds each layer separately") {
  SeededRng rng(71);
  const auto g = gaussian_grads(rng, {10, 20, 40});
  const auto out = filter_gradient(g, FilterConfig{0.8, PercentileScope::PerLayer});
  REQUIRE(out.thresholds.size() == 3);
  std::size_t offset = 0;
  for (std::size_t l = 0; l < 3; ++l) {
    const auto d = g.values(l).size();
    const auto kept = std::accumulate(out.mask.bits.begin() + static_cast<std::ptrdiff_t>(offset),
                                      out.mask.bits.begin() + static_cast<std::ptrdiff_t>(offset + d), std::size_t{0});
    CHECK(kept == d - static_cast<std::size_t>(std::floor(0.8 * static_cast<double>(d))));
    offset += d;
  }
}

TEST_CASE("degenerate layers are never selected") {
  SeededRng rng(81);
  auto g = gaussian_grads(rng, {20, 20});
  for (auto& x : g.values(0)) x = 7.0;
  const auto out = filter_gradient(g, FilterConfig{0.5});
  CHECK(out.stats[0].degenerate);
  for (std::size_t i = 0; i < 20; ++i) CHECK(out.mask.bits[i] == 0);
  CHECK(out.mask.kept_count > 0);
}

TEST_CASE("FilterConfig validation and scope parsing") {
  CHECK_THROWS_WITH_AS(FilterConfig{1.5}.validate(), "filter.qp must be in [0, 1): got 1.5", ConfigError);
  CHECK_THROWS_AS(FilterConfig{1.0}.validate(), ConfigError);
  CHECK_THROWS_AS(FilterConfig{-0.01}.validate(), ConfigError);
  CHECK_THROWS_AS((FilterConfig{0.5, PercentileScope::Global, 0.0}.validate()), ConfigError);
  CHECK_NOTHROW(FilterConfig{0.0}.validate());
  CHECK(parse_scope("global") == PercentileScope::Global);
  CHECK(parse_scope("per-layer") == PercentileScope::PerLayer);
  CHECK(to_string(PercentileScope::PerLayer) == "per-layer");
  CHECK_THROWS_AS(parse_scope("layer"), ConfigError);
}

TEST_CASE("apply_mask rejects length mismatch") {
  Mask m;
  m.bits = {1, 0};
  m.kept_count = 1;
  CHECK_THROWS_AS(apply_mask(GradientSet::single("w", FlatVec{1, 2, 3}), m), ShapeError);
}
