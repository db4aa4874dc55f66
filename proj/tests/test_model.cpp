// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "test_util.hpp"
#include "zsharp/errors.hpp"
#include "zsharp/model.hpp"
#include "zsharp/quadratic.hpp"
#include "zsharp/snapshot.hpp"

using namespace zsharp;

namespace {

Dataset random_dataset(SeededRng& rng, std::size_t n, std::size_t dim, std::size_t classes) {
  std::vector<double> features(n * dim);
  std::vector<int> labels(n);
  for (auto& x : features) x = rng.gaussian();
  for (auto& y : labels) y = static_cast<int>(rng.below(classes));
  return Dataset(dim, classes, std::move(features), std::move(labels));
}

ParamSet perturbed(const ParamSet& p, std::size_t layer, std::size_t i, double h) {
  ParamSet out = p;
  out.values(layer)[i] += h;
  return out;
}

}  // namespace

TEST_CASE("MlpSpec layout") {
  const MlpSpec spec{2, {4, 3}, 2, Activation::ReLU, 0};
  const auto p = init_params(spec);
  REQUIRE(p.num_layers() == 6);
  CHECK(p.layer(0).id == "fc1.weight");
  CHECK(p.layer(0).shape == std::vector<std::size_t>{4, 2});
  CHECK(p.layer(1).id == "fc1.bias");
  CHECK(p.layer(5).id == "fc3.bias");
  CHECK(p.layer(5).shape == std::vector<std::size_t>{2});
  CHECK(p.total_dim() == spec.param_count());
  CHECK(spec.param_count() == (2 * 4 + 4) + (4 * 3 + 3) + (3 * 2 + 2));

  CHECK_THROWS_AS((MlpSpec{0, {4}, 2, Activation::ReLU, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((MlpSpec{2, {0}, 2, Activation::ReLU, 0}.validate()), ConfigError);
  CHECK_THROWS_AS((MlpSpec{2, {4}, 0, Activation::ReLU, 0}.validate()), ConfigError);
}

TEST_CASE("init_params") {
  const MlpSpec spec{2, {4}, 2, Activation::ReLU, 7};
  CHECK(init_params(spec) == init_params(spec));
  CHECK(param_hash(init_params(spec)) == param_hash(init_params(spec)));
  MlpSpec other = spec;
  other.init_seed = 8;
  CHECK_FALSE(init_params(spec) == init_params(other));

  const auto p = init_params(spec);
  for (std::size_t l = 1; l < p.num_layers(); l += 2) {
    for (double b : p.values(l)) CHECK(b == 0.0);
  }

  const MlpSpec wide{256, {40}, 2, Activation::ReLU, 3};
  const auto& w = init_params(wide).values(0);
  REQUIRE(w.size() == 10240);
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / static_cast<double>(w.size());
  double var = 0.0;
  for (double x : w) var += (x - mean) * (x - mean);
  var /= static_cast<double>(w.size());
  CHECK(std::abs(var / (2.0 / 256.0) - 1.0) < 0.2);
}

TEST_CASE("untrained two-class loss is near ln 2") {
  SeededRng rng(4);
  const MlpSpec spec{2, {16, 16}, 2, Activation::ReLU, 5};
  auto params = init_params(spec);
  // Shrink the output layer so logits start close to uniform.
  for (auto& x : params.values(4)) x *= 0.01;
  const auto data = random_dataset(rng, 512, 2, 2);
  CHECK(std::abs(loss_only(spec, params, data) - std::log(2.0)) < 0.15);
}

TEST_CASE("uniform logits give exactly ln(n_classes)") {
  SeededRng rng(5);
  for (std::size_t k : {2u, 3u, 5u, 10u}) {
    const MlpSpec spec{3, {4}, k, Activation::ReLU, 1};
    auto params = init_params(spec);
    for (auto& x : params.values(2)) x = 0.0;
    for (auto& x : params.values(3)) x = 0.25;
    const auto data = random_dataset(rng, 20, 3, k);
    CHECK(loss_only(spec, params, data) == doctest::Approx(std::log(static_cast<double>(k))).epsilon(1e-14));
  }
}

TEST_CASE("backprop matches central finite differences") {
  SeededRng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    const MlpSpec spec{3, {5, 4}, 3, Activation::ReLU, rng.next_u64()};
    auto params = init_params(spec);
    for (std::size_t l = 1; l < params.num_layers(); l += 2) {
      for (auto& b : params.values(l)) b = rng.gaussian(0.0, 0.1);
    }
    const auto data = random_dataset(rng, trial % 2 ? 1 : 7, 3, 3);
    const auto [loss, grad] = loss_and_grad(spec, params, data);
    CHECK(loss >= 0.0);
    const double h = 1e-5;
    for (std::size_t l = 0; l < params.num_layers(); ++l) {
      for (std::size_t i = 0; i < params.values(l).size(); ++i) {
        const double fd = (loss_only(spec, perturbed(params, l, i, h), data) -
                           loss_only(spec, perturbed(params, l, i, -h), data)) /
                          (2.0 * h);
        const double an = grad.values(l)[i];
        if (std::abs(an) < 1e-8) {
          CHECK(std::abs(fd - an) < 1e-8);
        } else {
          CHECK(std::abs(fd - an) / std::abs(an) < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("duplicating every sample leaves loss and gradient unchanged") {
  SeededRng rng(7);
  const MlpSpec spec{2, {8}, 3, Activation::ReLU, 2};
  const auto params = init_params(spec);
  const auto data = random_dataset(rng, 13, 2, 3);
  std::vector<std::size_t> once(13);
  std::iota(once.begin(), once.end(), 0);
  std::vector<std::size_t> twice = once;
  twice.insert(twice.end(), once.begin(), once.end());
  const auto a = loss_and_grad(spec, params, data, once);
  const auto b = loss_and_grad(spec, params, data, twice);
  CHECK(std::abs(a.loss - b.loss) <= 1e-12);
  const auto fa = a.grad.flatten();
  const auto fb = b.grad.flatten();
  for (std::size_t i = 0; i < fa.size(); ++i) CHECK(std::abs(fa[i] - fb[i]) <= 1e-12);
}

TEST_CASE("prediction") {
  SeededRng rng(8);
  const MlpSpec spec{2, {4}, 3, Activation::ReLU, 3};
  auto params = init_params(spec);
  SUBCASE("equal logits predict class 0") {
    auto flat = params;
    for (auto& x : flat.values(2)) x = 0.0;
    for (auto& x : flat.values(3)) x = 1.0;
    const auto data = random_dataset(rng, 30, 2, 3);
    for (std::size_t i = 0; i < data.size(); ++i) CHECK(predict(spec, flat, data.row(i)) == 0);
  }
  SUBCASE("counting") {
    auto flat = params;
    for (auto& x : flat.values(2)) x = 0.0;
    std::vector<double> features(20, 0.5);
    const Dataset data(2, 3, features, {0, 0, 0, 0, 0, 0, 0, 1, 2, 1});
    CHECK(predict_accuracy(spec, flat, data) == doctest::Approx(0.7));
  }
  SUBCASE("self-labelled data") {
    auto data = random_dataset(rng, 50, 2, 3);
    std::vector<int> labels(50);
    for (std::size_t i = 0; i < 50; ++i) labels[i] = predict(spec, params, data.row(i));
    const Dataset relabeled(2, 3, data.features(), labels);
    CHECK(predict_accuracy(spec, params, relabeled) == 1.0);
  }
}

TEST_CASE("loss_and_grad rejects non-finite results") {
  const MlpSpec spec{2, {4}, 2, Activation::ReLU, 3};
  auto params = init_params(spec);
  params.values(0)[0] = 1e308;
  params.values(2)[0] = 1e308;
  const Dataset data(2, 2, {1e308, 1e308}, {0});
  CHECK_THROWS_AS(loss_and_grad(spec, params, data), NumericError);
}

TEST_CASE("quadratic examples") {
  const auto prob = QuadraticProblem::diagonal({1.0, 10.0});
  CHECK(prob.beta() == 10.0);
  auto [loss, grad] = quadratic_loss_grad(prob, FlatVec{1.0, 1.0});
  CHECK(loss == 5.5);
  CHECK(grad == FlatVec{1.0, 10.0});
  auto [l0, g0] = quadratic_loss_grad(prob, FlatVec{0.0, 0.0});
  CHECK(l0 == 0.0);
  CHECK(g0 == FlatVec{0.0, 0.0});

  SeededRng rng(9);
  for (int i = 0; i < 1000; ++i) {
    const FlatVec u{rng.gaussian(), rng.gaussian()};
    const FlatVec v{rng.gaussian(), rng.gaussian()};
    const auto gu = quadratic_loss_grad(prob, u).second;
    const auto gv = quadratic_loss_grad(prob, v).second;
    const FlatVec dg{gu[0] - gv[0], gu[1] - gv[1]};
    const FlatVec dw{u[0] - v[0], u[1] - v[1]};
    CHECK(norm2(dg) <= 10.0 * norm2(dw) * (1.0 + 1e-15));
  }
}

TEST_CASE("quadratic from a full matrix") {
  const auto prob = QuadraticProblem::from_matrix(2, {2.0, 1.0, 1.0, 2.0});
  CHECK(prob.beta() == doctest::Approx(3.0).epsilon(1e-12));
  const auto [loss, grad] = prob.loss_grad(FlatVec{1.0, -1.0}.span());
  CHECK(loss == doctest::Approx(1.0));
  CHECK(grad == FlatVec{1.0, -1.0});
  CHECK_THROWS_AS(QuadraticProblem::from_matrix(2, {1.0, 2.0, 0.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(QuadraticProblem::from_matrix(2, {1.0, 2.0, 2.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(QuadraticProblem::diagonal({1.0, 0.0}), ConfigError);
}

TEST_CASE("parameter snapshots round-trip exactly") {
  const MlpSpec spec{3, {7, 5}, 4, Activation::ReLU, 99};
  const auto params = init_params(spec);
  std::stringstream ss;
  save_params(ss, params);
  CHECK(ss.str().rfind("zsharp-params 1\n", 0) == 0);
  const auto back = load_params(ss);
  CHECK(back == params);

  zsharp::testing::TempDir dir;
  save_params(dir / "p", params);
  CHECK(load_params(dir / "p") == params);
}

TEST_CASE("snapshot parse errors") {
  for (const char* text : {"", "zsharp-params 2\nlayers 0\n", "zsharp-params 1\nlayers 1\nw 1 3\n1 2\n",
                           "zsharp-params 1\nlayers 1\nw 1 2\n1 x\n", "garbage"}) {
    std::stringstream ss(text);
    CHECK_THROWS_AS(load_params(ss), FormatError);
  }
}
