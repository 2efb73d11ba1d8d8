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

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace robe {

// The analysis harness views the whole parameter space as one flat vector of
// length n, split into n/z blocks of z consecutive entries. Each block is
// hashed to a start slot in [0, m); entry i lands in slot
// (start(i/z) + i mod z) mod m with an independent sign per entry.
struct SketchPlan {
  std::uint64_t n = 0;
  std::uint64_t m = 0;
  std::uint64_t z = 1;
};

// One concrete draw of the hash functions: a start slot per block and a sign
// per entry. Materialized so that exhaustive enumeration, the random oracle,
// and the universal family all feed the same estimator code.
struct HashDraw {
  std::vector<std::uint64_t> block_starts;  // n/z entries in [0, m)
  std::vector<std::int8_t> signs;           // n entries in {-1, +1}
};

enum class DrawBackend {
  kRandomOracle,  // seeded PRF; matches the full-randomness assumption
  kUniversal,     // affine universal family; the production hash
};

// Sample moments of the inner-product estimator over repeated hash draws.
struct MomentReport {
  double mean_estimate = 0.0;
  double variance_estimate = 0.0;
  std::uint64_t trials = 0;
  double standard_error_mean = 0.0;
  double standard_error_variance = 0.0;
};

// Validates the plan (n, m, z positive; z divides n; z <= m) and throws
// std::invalid_argument otherwise.
void validate_sketch_plan(const SketchPlan& plan);

// Draws one hash function deterministically from `seed`.
HashDraw draw_hash(const SketchPlan& plan, std::uint64_t seed,
                   DrawBackend backend);

// Slot of entry i under the draw.
std::uint64_t draw_slot(const SketchPlan& plan, const HashDraw& draw,
                        std::uint64_t i);

// Dense n x m sign-pattern matrix S (row-major): row i holds a single
// nonzero, signs[i], at column draw_slot(i). Guarded to n*m <= 10^6.
std::vector<double> materialize_sketch_matrix(const SketchPlan& plan,
                                              const HashDraw& draw);

// S^T x: out[j] = sum over i with slot(i) = j of signs[i] * x[i].
std::vector<double> project(const std::vector<double>& x,
                            const SketchPlan& plan, const HashDraw& draw);

// <project(x), project(y)>, the sketched inner-product estimator.
double inner_product_estimate(const std::vector<double>& x,
                              const std::vector<double>& y,
                              const SketchPlan& plan, const HashDraw& draw);

// Estimator variance for z = 1 (classic feature hashing):
// (1/m) (sum_{i != j} x_i^2 y_j^2 + sum_{i != j} x_i y_i x_j y_j)
// over ordered pairs.
double theoretical_variance_v1(const std::vector<double>& x,
                               const std::vector<double>& y, std::uint64_t m);

// Estimator variance for block size z: the same sums restricted to ordered
// pairs whose entries fall in different blocks, divided by m. Also computed
// a second way, as V1 minus the per-block V1 sum, and the two routes are
// cross-checked to 1e-12 relative before returning.
double theoretical_variance_vz(const std::vector<double>& x,
                               const std::vector<double>& y, std::uint64_t m,
                               std::uint64_t z);

// Alternate normalization 1/(m - z + 1), the non-wrapping placement variant.
// Provided for comparison only; the circular array realizes 1/m.
double theoretical_variance_vz_nonwrap(const std::vector<double>& x,
                                       const std::vector<double>& y,
                                       std::uint64_t m, std::uint64_t z);

// Sample moments of the estimator over `trials` independent draws with
// per-trial seed = seed xor trial index. Trial estimates are stored and
// reduced in a fixed order, so the report is identical for any thread count.
MomentReport monte_carlo_moments(const std::vector<double>& x,
                                 const std::vector<double>& y, std::uint64_t m,
                                 std::uint64_t z, std::uint64_t trials,
                                 std::uint64_t seed,
                                 DrawBackend backend = DrawBackend::kRandomOracle);

// Exact moments over the uniform distribution of all m^(n/z) block
// placements and 2^n sign patterns. Guarded to m^(n/z) * 2^n <= 10^7.
// Returns (mean, variance).
std::pair<double, double> exhaustive_moments(const std::vector<double>& x,
                                             const std::vector<double>& y,
                                             std::uint64_t m, std::uint64_t z);

// Moments of the estimated inner product between two embeddings of length D
// carved out of the parameter vector at the given offsets: each embedding is
// reconstructed from the sketch entry by entry, then the two reconstructions
// are dotted. Used to check the same-block / different-block bias factors.
MomentReport embedding_pair_moments(const std::vector<double>& theta,
                                    std::uint64_t a_offset,
                                    std::uint64_t b_offset, std::uint32_t d,
                                    std::uint64_t m, std::uint64_t z,
                                    std::uint64_t trials, std::uint64_t seed);

// The bracketed part of the embedding-pair variance bound:
// D/m^2 * ||theta||^4 + |sum_{i != j <= D} ta_i tb_i ta_j tb_j| / m^2.
// Callers compare Monte Carlo variance against a calibrated multiple of it.
double embedding_pair_variance_envelope(const std::vector<double>& theta,
                                        std::uint64_t a_offset,
                                        std::uint64_t b_offset,
                                        std::uint32_t d, std::uint64_t m);

// The closed-form relative variance gap (V_z - V_1) / V_1 under the
// magnitude-homogeneity assumption: alpha/(1-alpha) * (1-beta) with
// alpha = (z-1)/m and beta = m/(n-1). Diagnostic only.
double variance_ratio_approx(std::uint64_t n, std::uint64_t m,
                             std::uint64_t z);

}  // namespace robe
