/*
 * Copyright (c) 2026, the ROBE array authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <vector>

#include "oracles.hpp"
#include "robe/sketch.hpp"
#include "robe/util.hpp"

using namespace robe;

namespace {

std::vector<double> random_vec(std::uint64_t n, std::uint64_t seed) {
  RandomStream rng(seed);
  std::vector<double> v(n);
  for (double& c : v) c = rng.next_gaussian();
  return v;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

}  // namespace

TEST_CASE("sketch plan validation") {
  CHECK_NOTHROW(validate_sketch_plan({8, 4, 2}));
  CHECK_THROWS_AS(validate_sketch_plan({0, 4, 2}), std::invalid_argument);
  CHECK_THROWS_AS(validate_sketch_plan({8, 0, 2}), std::invalid_argument);
  CHECK_THROWS_AS(validate_sketch_plan({8, 4, 0}), std::invalid_argument);
  CHECK_THROWS_AS(validate_sketch_plan({8, 4, 3}), std::invalid_argument);  // 3 does not divide 8
  CHECK_THROWS_AS(validate_sketch_plan({8, 2, 4}), std::invalid_argument);  // z > m
}

TEST_CASE("draw_hash produces valid deterministic draws on both backends") {
  const SketchPlan plan{12, 7, 3};
  for (DrawBackend backend : {DrawBackend::kRandomOracle,
                              DrawBackend::kUniversal}) {
    const HashDraw a = draw_hash(plan, 42, backend);
    const HashDraw b = draw_hash(plan, 42, backend);
    CHECK(a.block_starts == b.block_starts);
    CHECK(a.signs == b.signs);
    REQUIRE(a.block_starts.size() == 4);
    REQUIRE(a.signs.size() == 12);
    for (std::uint64_t s : a.block_starts) CHECK(s < 7);
    for (std::int8_t s : a.signs) CHECK((s == 1 || s == -1));
    const HashDraw c = draw_hash(plan, 43, backend);
    CHECK((a.block_starts != c.block_starts || a.signs != c.signs));
  }
}

TEST_CASE("draw_slot walks each block consecutively modulo m") {
  const SketchPlan plan{12, 7, 3};
  const HashDraw draw = draw_hash(plan, 9, DrawBackend::kRandomOracle);
  for (std::uint64_t i = 0; i < plan.n; ++i) {
    CHECK(draw_slot(plan, draw, i) ==
          (draw.block_starts[i / plan.z] + i % plan.z) % plan.m);
  }
}

TEST_CASE("materialized matrix has one signed unit per row") {
  const SketchPlan plan{32, 8, 4};
  const HashDraw draw = draw_hash(plan, 5, DrawBackend::kRandomOracle);
  const std::vector<double> s = materialize_sketch_matrix(plan, draw);
  REQUIRE(s.size() == 32 * 8);
  for (std::uint64_t i = 0; i < 32; ++i) {
    int nonzeros = 0;
    for (std::uint64_t j = 0; j < 8; ++j) {
      const double v = s[i * 8 + j];
      if (v != 0.0) {
        ++nonzeros;
        CHECK(std::abs(v) == 1.0);
        CHECK(j == draw_slot(plan, draw, i));
        CHECK(v == static_cast<double>(draw.signs[i]));
      }
    }
    CHECK(nonzeros == 1);
  }
  CHECK_THROWS_AS(
      materialize_sketch_matrix({2000, 1000, 1},
                                draw_hash({2000, 1000, 1}, 1,
                                          DrawBackend::kRandomOracle)),
      std::invalid_argument);
}

TEST_CASE("project agrees with the explicit matrix product") {
  const SketchPlan plan{32, 8, 4};
  const std::vector<double> x = random_vec(32, 10);
  for (DrawBackend backend : {DrawBackend::kRandomOracle,
                              DrawBackend::kUniversal}) {
    const HashDraw draw = draw_hash(plan, 77, backend);
    const std::vector<double> s = materialize_sketch_matrix(plan, draw);
    std::vector<double> expected(8, 0.0);
    for (std::uint64_t i = 0; i < 32; ++i) {
      for (std::uint64_t j = 0; j < 8; ++j) {
        expected[j] += s[i * 8 + j] * x[i];
      }
    }
    const std::vector<double> got = project(x, plan, draw);
    REQUIRE(got.size() == 8);
    for (std::uint64_t j = 0; j < 8; ++j) {
      CHECK(got[j] == doctest::Approx(expected[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("project is linear and maps zero to zero") {
  const SketchPlan plan{16, 8, 2};
  const HashDraw draw = draw_hash(plan, 3, DrawBackend::kRandomOracle);
  for (double v : project(std::vector<double>(16, 0.0), plan, draw)) {
    CHECK(v == 0.0);
  }
  const std::vector<double> x = random_vec(16, 1), y = random_vec(16, 2);
  std::vector<double> combo(16);
  for (int i = 0; i < 16; ++i) combo[i] = 2.5 * x[i] + y[i];
  const auto px = project(x, plan, draw);
  const auto py = project(y, plan, draw);
  const auto pc = project(combo, plan, draw);
  for (int j = 0; j < 8; ++j) {
    CHECK(pc[j] == doctest::Approx(2.5 * px[j] + py[j]).epsilon(1e-12));
  }
}

TEST_CASE("an injective draw reproduces the inner product exactly") {
  const SketchPlan plan{8, 8, 2};
  HashDraw draw;
  draw.block_starts = {0, 2, 4, 6};  // rows laid out end to end
  draw.signs.assign(8, 1);
  const std::vector<double> x = random_vec(8, 4), y = random_vec(8, 5);
  CHECK(project(x, plan, draw) == x);
  CHECK(inner_product_estimate(x, y, plan, draw) ==
        doctest::Approx(dot(x, y)).epsilon(1e-15));
}

TEST_CASE("estimate equals the dot of the two projections") {
  const SketchPlan plan{24, 6, 2};
  const HashDraw draw = draw_hash(plan, 8, DrawBackend::kUniversal);
  const std::vector<double> x = random_vec(24, 6), y = random_vec(24, 7);
  CHECK(inner_product_estimate(x, y, plan, draw) ==
        doctest::Approx(dot(project(x, plan, draw), project(y, plan, draw)))
            .epsilon(1e-12));
}

TEST_CASE("variance formula for block size one matches hand values") {
  CHECK(theoretical_variance_v1({1.0, 1.0}, {1.0, 1.0}, 2) ==
        doctest::Approx(2.0).epsilon(1e-15));
  CHECK(theoretical_variance_v1({0.0, 0.0}, {0.0, 0.0}, 5) == 0.0);
  // Scaling x by 2 and y by 3 scales every term by 4 * 9.
  const std::vector<double> x = random_vec(10, 11), y = random_vec(10, 12);
  std::vector<double> x2 = x, y3 = y;
  for (double& v : x2) v *= 2.0;
  for (double& v : y3) v *= 3.0;
  CHECK(theoretical_variance_v1(x2, y3, 7) ==
        doctest::Approx(36.0 * theoretical_variance_v1(x, y, 7))
            .epsilon(1e-12));
}

TEST_CASE("blocked variance formula: edge cases and hand value") {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> y = {4.0, 3.0, 2.0, 1.0};
  // One block of the whole vector: no cross-block pairs survive.
  CHECK(theoretical_variance_vz(x, y, 5, 4) == 0.0);
  // z = 1 must reduce to the unblocked formula.
  CHECK(theoretical_variance_vz(x, y, 3, 1) ==
        doctest::Approx(theoretical_variance_v1(x, y, 3)).epsilon(1e-15));
  // Cross-block pair sums: 650 + 200, divided by m = 3.
  CHECK(theoretical_variance_vz(x, y, 3, 2) ==
        doctest::Approx(850.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("blocked variance never increases along a divisor chain") {
  const std::vector<double> x = random_vec(16, 21), y = random_vec(16, 22);
  double prev = theoretical_variance_vz(x, y, 33, 1);
  for (std::uint64_t z : {2, 4, 8, 16}) {
    const double cur = theoretical_variance_vz(x, y, 33, z);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}

TEST_CASE("nonwrap normalization divides by m - z + 1") {
  const std::vector<double> x = random_vec(8, 31), y = random_vec(8, 32);
  const double wrap = theoretical_variance_vz(x, y, 10, 4);
  const double nonwrap = theoretical_variance_vz_nonwrap(x, y, 10, 4);
  CHECK(nonwrap == doctest::Approx(wrap * 10.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("exhaustive moments match the independent enumerator") {
  RandomStream rng(55);
  for (int t = 0; t < 12; ++t) {
    const std::uint64_t z = (t % 3 == 0) ? 1 : 2;
    const std::uint64_t m = 2 + t % 2 + (z > 1 ? 1 : 0);
    std::vector<double> x(4), y(4);
    for (double& v : x) v = rng.next_gaussian();
    for (double& v : y) v = rng.next_gaussian();
    const auto [mean, var] = exhaustive_moments(x, y, m, z);
    const auto [omean, ovar] = oracle::exhaustive_moments(x, y, m, z);
    CHECK(mean == doctest::Approx(static_cast<double>(omean)).epsilon(1e-12));
    CHECK(var == doctest::Approx(static_cast<double>(ovar)).epsilon(1e-12));
    CHECK(mean == doctest::Approx(dot(x, y)).epsilon(1e-12));
    CHECK(var ==
          doctest::Approx(theoretical_variance_vz(x, y, m, z)).epsilon(1e-12));
  }
}

TEST_CASE("exhaustive moments on the worked example") {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> y = {4.0, 3.0, 2.0, 1.0};
  const auto [mean, var] = exhaustive_moments(x, y, 3, 2);
  CHECK(mean == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(var == doctest::Approx(850.0 / 3.0).epsilon(1e-12));

  // Orthogonal vectors: unbiased around zero.
  const auto [mean0, var0] =
      exhaustive_moments({1.0, 0.0, 0.0, 1.0}, {0.0, 1.0, 1.0, 0.0}, 3, 2);
  CHECK(mean0 == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(var0 > 0.0);
}

TEST_CASE("exhaustive enumeration is guarded") {
  const std::vector<double> big(24, 1.0);
  CHECK_THROWS_AS(exhaustive_moments(big, big, 10, 1), std::invalid_argument);
  const std::vector<double> x = {1.0, 2.0};
  CHECK_THROWS_AS(exhaustive_moments(x, {1.0}, 3, 1), std::invalid_argument);
}

TEST_CASE("monte carlo moments agree with theory under the random oracle") {
  const std::uint64_t n = 64, m = 16;
  const std::vector<double> x = random_vec(n, 41), y = random_vec(n, 42);
  const double expected_mean = dot(x, y);
  for (std::uint64_t z : {1, 4}) {
    const MomentReport r = monte_carlo_moments(x, y, m, z, 20000, 7,
                                               DrawBackend::kRandomOracle);
    CHECK(r.trials == 20000);
    CHECK(r.standard_error_mean > 0.0);
    CHECK(std::abs(r.mean_estimate - expected_mean) <=
          4.0 * r.standard_error_mean);
    const double vz = theoretical_variance_vz(x, y, m, z);
    CHECK(std::abs(r.variance_estimate - vz) <=
          4.0 * r.standard_error_variance);
  }
  CHECK_THROWS_AS(monte_carlo_moments(x, y, m, 4, 1, 7),
                  std::invalid_argument);
}

TEST_CASE("monte carlo under the universal family is also unbiased") {
  const std::uint64_t n = 64, m = 16;
  const std::vector<double> x = random_vec(n, 51), y = random_vec(n, 52);
  const MomentReport r = monte_carlo_moments(x, y, m, 4, 20000, 19,
                                             DrawBackend::kUniversal);
  CHECK(std::abs(r.mean_estimate - dot(x, y)) <= 4.0 * r.standard_error_mean);
}

TEST_CASE("monte carlo reports are independent of the thread count") {
  const std::vector<double> x = random_vec(32, 61), y = random_vec(32, 62);
  setenv("ROBE_THREADS", "1", 1);
  const MomentReport a = monte_carlo_moments(x, y, 8, 2, 5000, 3);
  setenv("ROBE_THREADS", "6", 1);
  const MomentReport b = monte_carlo_moments(x, y, 8, 2, 5000, 3);
  unsetenv("ROBE_THREADS");
  CHECK(a.mean_estimate == b.mean_estimate);
  CHECK(a.variance_estimate == b.variance_estimate);
  CHECK(a.standard_error_mean == b.standard_error_mean);
  CHECK(a.standard_error_variance == b.standard_error_variance);
}

TEST_CASE("embedding pair moments: zero parameters, same and different blocks") {
  // Zero parameter vector: the estimate is identically zero.
  const MomentReport zero =
      embedding_pair_moments(std::vector<double>(16, 0.0), 0, 4, 4, 50, 8,
                             500, 1);
  CHECK(zero.mean_estimate == 0.0);
  CHECK(zero.variance_estimate == 0.0);

  RandomStream rng(83);
  std::vector<double> theta(16);
  for (double& v : theta) v = rng.next_gaussian();
  double pair_dot = 0.0;
  for (int k = 0; k < 4; ++k) pair_dot += theta[k] * theta[4 + k];

  // Both rows inside one block of size 2D: the estimate is unbiased.
  const MomentReport same =
      embedding_pair_moments(theta, 0, 4, 4, 50, 8, 40000, 5);
  CHECK(std::abs(same.mean_estimate - pair_dot) <=
        4.0 * same.standard_error_mean);

  // Rows in different blocks: the mean picks up the factor (1 + 1/m).
  const MomentReport diff =
      embedding_pair_moments(theta, 0, 4, 4, 100, 4, 40000, 5);
  CHECK(std::abs(diff.mean_estimate - pair_dot * 1.01) <=
        4.0 * diff.standard_error_mean);
}

TEST_CASE("embedding pair moments validate their slices") {
  const std::vector<double> theta(16, 1.0);
  CHECK_THROWS_AS(embedding_pair_moments(theta, 0, 2, 4, 50, 8, 100, 1),
                  std::invalid_argument);  // overlapping slices
  CHECK_THROWS_AS(embedding_pair_moments(theta, 0, 14, 4, 50, 8, 100, 1),
                  std::invalid_argument);  // runs past the end
  CHECK_THROWS_AS(embedding_pair_moments(theta, 0, 4, 3, 50, 8, 100, 1),
                  std::invalid_argument);  // d and z do not divide
  CHECK_THROWS_AS(embedding_pair_moments(theta, 0, 4, 4, 50, 8, 1, 1),
                  std::invalid_argument);  // too few trials
}

TEST_CASE("embedding pair variance envelope hand value") {
  // theta = ones(4), slices (0..1) and (2..3), m = 10:
  // D/m^2 * ||theta||^4 = 2 * 256 / 100... with ||theta||^2 = 4: 2*16/100.
  const std::vector<double> theta(4, 1.0);
  const double env = embedding_pair_variance_envelope(theta, 0, 2, 2, 10);
  CHECK(env == doctest::Approx(2.0 * 16.0 / 100.0 + 2.0 / 100.0)
                   .epsilon(1e-15));
  CHECK(embedding_pair_variance_envelope(std::vector<double>(4, 0.0), 0, 2, 2,
                                         10) == 0.0);
}

TEST_CASE("closed-form variance ratio") {
  CHECK(variance_ratio_approx(1001, 100, 1) == 0.0);
  CHECK(variance_ratio_approx(101, 100, 5) == 0.0);  // beta = 1
  CHECK(variance_ratio_approx(1001, 100, 5) ==
        doctest::Approx((0.04 / 0.96) * 0.9).epsilon(1e-12));
  CHECK_THROWS_AS(variance_ratio_approx(1, 100, 5), std::invalid_argument);
  CHECK_THROWS_AS(variance_ratio_approx(1001, 4, 5), std::invalid_argument);
}
