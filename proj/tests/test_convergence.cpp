// Copyright 2026 The ZSharp Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>

#include "zsharp/convergence.hpp"
#include "zsharp/errors.hpp"
#include "zsharp/rng.hpp"

using namespace zsharp;

TEST_CASE("constant-step bound on diag(1, 10)") {
  const auto prob = QuadraticProblem::diagonal({1.0, 10.0});
  const auto rep =
      verify_constant_step(prob, 0.025, 0.05, 200, AscentVariant::Unnormalized, FilterConfig{0.5}, FlatVec{1.0, 1.0});
  CHECK(rep.satisfied);
  CHECK(rep.lhs <= rep.rhs);
  CHECK(rep.T == 200);
  CHECK(rep.beta == 10.0);
}

TEST_CASE("precondition errors") {
  const auto prob = QuadraticProblem::diagonal({1.0, 10.0});
  const FlatVec w0{1.0, 1.0};
  CHECK_THROWS_WITH_AS(verify_constant_step(prob, 0.5, 0.05, 10, AscentVariant::Unnormalized, FilterConfig{0.5}, w0),
                       "eta exceeds 1/(4 beta)", ConfigError);
  CHECK_THROWS_WITH_AS(verify_constant_step(prob, 0.025, 1.0, 10, AscentVariant::Unnormalized, FilterConfig{0.5}, w0),
                       "ascent radius violates beta^2 r^2 <= 1/4", ConfigError);
  CHECK_NOTHROW(check_step_preconditions(10.0, 0.025, 0.05));
  CHECK_THROWS_AS(verify_constant_step(prob, 0.025, 0.05, 0, AscentVariant::Unnormalized, FilterConfig{0.5}, w0),
                  ConfigError);
  CHECK_THROWS_AS(
      verify_constant_step(prob, 0.025, 0.05, 10, AscentVariant::Unnormalized, FilterConfig{0.5}, FlatVec{1.0}),
      ShapeError);
}

TEST_CASE("hand-computed first step") {
  // One step from (1, 1) with qp = 0: ascent to w + r g, descent from w.
  const auto prob = QuadraticProblem::diagonal({1.0, 10.0});
  const auto rep =
      verify_constant_step(prob, 0.025, 0.05, 1, AscentVariant::Unnormalized, FilterConfig{0.0}, FlatVec{1.0, 1.0});
  const double h0 = 1.0 + 0.05 * 1.0;
  const double h1 = 1.0 + 0.05 * 10.0;
  CHECK(rep.final_w[0] == doctest::Approx(1.0 - 0.025 * h0).epsilon(1e-15));
  CHECK(rep.final_w[1] == doctest::Approx(1.0 - 0.025 * 10.0 * h1).epsilon(1e-15));
  CHECK(rep.lhs == doctest::Approx(101.0));
}

TEST_CASE("constant-step bound over random feasible quadratics") {
  SeededRng rng(2026);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t d = 2 + rng.below(8);
    std::vector<double> diag(d);
    for (auto& x : diag) x = std::exp(rng.gaussian(0.0, 1.5));
    const auto prob = QuadraticProblem::diagonal(diag);
    const double eta = (0.05 + 0.95 * rng.uniform()) / (4.0 * prob.beta());
    const double r = rng.uniform() * 0.5 / prob.beta();
    FlatVec w0(d);
    for (auto& x : w0) x = rng.gaussian();
    for (double qp : {0.0, 0.5, 0.95}) {
      for (auto variant : {AscentVariant::Unnormalized, AscentVariant::Normalized}) {
        const auto rep = verify_constant_step(prob, eta, r, 200, variant, FilterConfig{qp}, w0);
        CHECK(rep.satisfied == (rep.lhs <= rep.rhs));
        if (variant == AscentVariant::Unnormalized) CHECK(rep.satisfied);
      }
    }
  }
}

TEST_CASE("full-batch descent is monotone under the step conditions") {
  SeededRng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<double> diag(5);
    for (auto& x : diag) x = 0.1 + 10.0 * rng.uniform();
    const auto prob = QuadraticProblem::diagonal(diag);
    const double eta = rng.uniform() / (4.0 * prob.beta());
    const double r = rng.uniform() * 0.5 / prob.beta();
    FlatVec w(5);
    for (auto& x : w) x = rng.gaussian();
    double prev = prob.loss_grad(w.span()).first;
    for (int t = 0; t < 100; ++t) {
      w = verify_constant_step(prob, eta, r, 1, AscentVariant::Unnormalized, FilterConfig{0.0}, w).final_w;
      const double loss = prob.loss_grad(w.span()).first;
      CHECK(loss <= prev);
      prev = loss;
    }
  }
}

TEST_CASE("power schedule validation") {
  CHECK_NOTHROW(PowerSchedule{}.validate(10.0));
  CHECK(PowerSchedule{}.eta_at(0) == 0.025);
  CHECK(PowerSchedule{}.eta_at(9) == doctest::Approx(0.0025));
  CHECK(PowerSchedule{}.r_at(4) == doctest::Approx(0.01));
  CHECK_THROWS_AS((PowerSchedule{0.025, 0.0, 0.05, 1.0}.validate(10.0)), ConfigError);
  CHECK_THROWS_AS((PowerSchedule{0.025, 0.5, 0.05, 1.0}.validate(10.0)), ConfigError);
  CHECK_THROWS_AS((PowerSchedule{0.025, 1.5, 0.05, 1.0}.validate(10.0)), ConfigError);
  CHECK_THROWS_AS((PowerSchedule{0.025, 0.6, 0.05, 0.1}.validate(10.0)), ConfigError);
  CHECK_NOTHROW((PowerSchedule{0.025, 0.6, 0.05, 0.3}.validate(10.0)));
  CHECK_THROWS_AS((PowerSchedule{0.5, 1.0, 0.05, 1.0}.validate(10.0)), ConfigError);
}

TEST_CASE("diminishing-step run") {
  const auto prob = QuadraticProblem::diagonal({1.0, 10.0});
  const auto rep = verify_diminishing_step(prob, PowerSchedule{}, FilterConfig{0.0}, FlatVec{1.0, 1.0}, {1000, 100}, -1.0);
  REQUIRE(rep.trace.size() == 2);
  CHECK(rep.trace[0].T == 100);
  CHECK(rep.trace[1].T == 1000);
  CHECK(rep.trace[1].min_grad_norm_sq < rep.trace[0].min_grad_norm_sq);
  CHECK(rep.monotone);
  CHECK(rep.decreased);
  CHECK(rep.satisfied);
  CHECK(rep.weighted_sum > 0.0);

  const auto strict = verify_diminishing_step(prob, PowerSchedule{}, FilterConfig{0.0}, FlatVec{1.0, 1.0}, {100}, 1e-4);
  CHECK_FALSE(strict.below_threshold);
  CHECK_FALSE(strict.satisfied);
}

TEST_CASE("starting at the optimum converges trivially") {
  const auto prob = QuadraticProblem::diagonal({1.0, 10.0});
  const auto rep =
      verify_diminishing_step(prob, PowerSchedule{}, FilterConfig{0.5}, FlatVec{0.0, 0.0}, {100, 1000}, 1e-4);
  for (const auto& cp : rep.trace) CHECK(cp.min_grad_norm_sq == 0.0);
  CHECK(rep.satisfied);
}
