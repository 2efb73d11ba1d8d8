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

#include "robe/sketch.hpp"

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "robe/hash.hpp"
#include "robe/util.hpp"

namespace robe {

namespace {

constexpr std::uint64_t kBlockSalt = 0x626c6f636b735a00ULL;
constexpr std::uint64_t kSignSalt = 0x7369676e735a0000ULL;
constexpr std::uint64_t kMatrixGuard = 1000000;      // n*m cap
constexpr std::uint64_t kEnumerationGuard = 10000000;  // configs cap

// Mersenne prime 2^61 - 1 for universal draws whose range exceeds 2^31 - 1.
constexpr std::uint64_t kLargePrime = 2305843009213693951ULL;

void check_lengths(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) {
    throw std::invalid_argument("vectors must have equal length, got " +
                                std::to_string(x.size()) + " and " +
                                std::to_string(y.size()));
  }
}

// Ordered-pair sums of the variance formula over a contiguous index range:
// first  = sum_{i != j} x_i^2 y_j^2, second = sum_{i != j} x_i y_i x_j y_j,
// both via the closed forms (sum products minus diagonal).
std::pair<double, double> pair_sums(const std::vector<double>& x,
                                    const std::vector<double>& y,
                                    std::size_t lo, std::size_t hi) {
  double sxx = 0.0, syy = 0.0, sxy = 0.0, sxxyy = 0.0, sxy2 = 0.0;
  for (std::size_t i = lo; i < hi; ++i) {
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
    sxxyy += x[i] * x[i] * y[i] * y[i];
    sxy2 += (x[i] * y[i]) * (x[i] * y[i]);
  }
  return {sxx * syy - sxxyy, sxy * sxy - sxy2};
}

MomentReport summarize(const std::vector<double>& estimates) {
  MomentReport report;
  report.trials = estimates.size();
  const double n = static_cast<double>(estimates.size());
  double sum = 0.0;
  for (double e : estimates) sum += e;
  const double mean = sum / n;
  double m2 = 0.0, m4 = 0.0;
  for (double e : estimates) {
    const double d = e - mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  report.mean_estimate = mean;
  if (estimates.size() >= 2) {
    const double var = m2 / (n - 1.0);
    report.variance_estimate = var;
    report.standard_error_mean = std::sqrt(var / n);
    // Large-sample standard error of the sample variance.
    const double quartic = m4 / n;
    const double inner = quartic - var * var * (n - 3.0) / (n - 1.0);
    report.standard_error_variance = std::sqrt(std::max(0.0, inner) / n);
  }
  return report;
}

}  // namespace

void validate_sketch_plan(const SketchPlan& plan) {
  if (plan.n == 0 || plan.m == 0 || plan.z == 0) {
    throw std::invalid_argument("sketch plan: n, m, z must be positive");
  }
  if (plan.n % plan.z != 0) {
    throw std::invalid_argument("sketch plan: z must divide n");
  }
  if (plan.z > plan.m) {
    throw std::invalid_argument("sketch plan: z must not exceed m");
  }
}

HashDraw draw_hash(const SketchPlan& plan, std::uint64_t seed,
                   DrawBackend backend) {
  validate_sketch_plan(plan);
  const std::uint64_t blocks = plan.n / plan.z;
  HashDraw draw;
  draw.block_starts.resize(blocks);
  draw.signs.resize(plan.n);
  const std::uint64_t block_seed = mix64(seed ^ kBlockSalt);
  const std::uint64_t sign_seed = mix64(seed ^ kSignSalt);
  if (backend == DrawBackend::kRandomOracle) {
    for (std::uint64_t b = 0; b < blocks; ++b) {
      draw.block_starts[b] = random_oracle_hash(block_seed, 0, 0, b, plan.m);
    }
    for (std::uint64_t i = 0; i < plan.n; ++i) {
      draw.signs[i] =
          static_cast<std::int8_t>(random_oracle_sign(sign_seed, 0, 0, i));
    }
  } else {
    const std::uint64_t p =
        plan.m < kDefaultPrime ? kDefaultPrime : kLargePrime;
    const HashParams block_params = sample_hash_params(block_seed, p, plan.m);
    const HashParams sign_params =
        sample_hash_params(sign_seed, kDefaultPrime, 2);
    for (std::uint64_t b = 0; b < blocks; ++b) {
      draw.block_starts[b] = uhash3(block_params, 0, 0, b);
    }
    for (std::uint64_t i = 0; i < plan.n; ++i) {
      draw.signs[i] = static_cast<std::int8_t>(sign_hash(sign_params, 0, 0, i));
    }
  }
  return draw;
}

std::uint64_t draw_slot(const SketchPlan& plan, const HashDraw& draw,
                        std::uint64_t i) {
  return (draw.block_starts[i / plan.z] + i % plan.z) % plan.m;
}

std::vector<double> materialize_sketch_matrix(const SketchPlan& plan,
                                              const HashDraw& draw) {
  validate_sketch_plan(plan);
  if (plan.n * plan.m > kMatrixGuard) {
    throw std::invalid_argument(
        "materialize_sketch_matrix: n*m exceeds the materialization guard");
  }
  std::vector<double> matrix(plan.n * plan.m, 0.0);
  for (std::uint64_t i = 0; i < plan.n; ++i) {
    matrix[i * plan.m + draw_slot(plan, draw, i)] =
        static_cast<double>(draw.signs[i]);
  }
  return matrix;
}

std::vector<double> project(const std::vector<double>& x,
                            const SketchPlan& plan, const HashDraw& draw) {
  if (x.size() != plan.n) {
    throw std::invalid_argument("project: input length " +
                                std::to_string(x.size()) +
                                " does not match plan n " +
                                std::to_string(plan.n));
  }
  std::vector<double> out(plan.m, 0.0);
  for (std::uint64_t i = 0; i < plan.n; ++i) {
    out[draw_slot(plan, draw, i)] += static_cast<double>(draw.signs[i]) * x[i];
  }
  return out;
}

double inner_product_estimate(const std::vector<double>& x,
                              const std::vector<double>& y,
                              const SketchPlan& plan, const HashDraw& draw) {
  check_lengths(x, y);
  const std::vector<double> px = project(x, plan, draw);
  const std::vector<double> py = project(y, plan, draw);
  double dot = 0.0;
  for (std::uint64_t j = 0; j < plan.m; ++j) dot += px[j] * py[j];
  return dot;
}

double theoretical_variance_v1(const std::vector<double>& x,
                               const std::vector<double>& y, std::uint64_t m) {
  check_lengths(x, y);
  if (m < 1) throw std::invalid_argument("theoretical_variance_v1: m < 1");
  const auto [first, second] = pair_sums(x, y, 0, x.size());
  return (first + second) / static_cast<double>(m);
}

namespace {

// Ordered-pair sums restricted to pairs whose entries lie in different
// blocks, by direct double loop. This route deliberately shares no algebra
// with the closed-form decomposition so the two can cross-check each other.
double cross_block_sum(const std::vector<double>& x,
                       const std::vector<double>& y, std::uint64_t z) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (i / z == j / z) continue;
      total += x[i] * x[i] * y[j] * y[j] + x[i] * y[i] * x[j] * y[j];
    }
  }
  return total;
}

}  // namespace

double theoretical_variance_vz(const std::vector<double>& x,
                               const std::vector<double>& y, std::uint64_t m,
                               std::uint64_t z) {
  check_lengths(x, y);
  SketchPlan plan{x.size(), m, z};
  validate_sketch_plan(plan);
  const double restricted = cross_block_sum(x, y, z) / static_cast<double>(m);
  double decomposition = theoretical_variance_v1(x, y, m);
  for (std::size_t lo = 0; lo < x.size(); lo += z) {
    const auto [first, second] = pair_sums(x, y, lo, lo + z);
    decomposition -= (first + second) / static_cast<double>(m);
  }
  const double scale =
      std::max({1e-300, std::fabs(restricted), std::fabs(decomposition)});
  if (std::fabs(restricted - decomposition) > 1e-12 * scale) {
    throw std::logic_error(
        "theoretical_variance_vz: restricted-sum and decomposition routes "
        "disagree");
  }
  return restricted;
}

double theoretical_variance_vz_nonwrap(const std::vector<double>& x,
                                       const std::vector<double>& y,
                                       std::uint64_t m, std::uint64_t z) {
  check_lengths(x, y);
  SketchPlan plan{x.size(), m, z};
  validate_sketch_plan(plan);
  if (m < z) throw std::invalid_argument("nonwrap variant: m < z");
  return cross_block_sum(x, y, z) / static_cast<double>(m - z + 1);
}

MomentReport monte_carlo_moments(const std::vector<double>& x,
                                 const std::vector<double>& y, std::uint64_t m,
                                 std::uint64_t z, std::uint64_t trials,
                                 std::uint64_t seed, DrawBackend backend) {
  check_lengths(x, y);
  SketchPlan plan{x.size(), m, z};
  validate_sketch_plan(plan);
  if (trials < 2) {
    throw std::invalid_argument("monte_carlo_moments: trials must be >= 2");
  }
  std::vector<double> estimates(trials);
  parallel_chunks(trials, env_threads(), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t t = lo; t < hi; ++t) {
      const HashDraw draw =
          draw_hash(plan, seed ^ static_cast<std::uint64_t>(t), backend);
      estimates[t] = inner_product_estimate(x, y, plan, draw);
    }
  });
  return summarize(estimates);
}

std::pair<double, double> exhaustive_moments(const std::vector<double>& x,
                                             const std::vector<double>& y,
                                             std::uint64_t m, std::uint64_t z) {
  check_lengths(x, y);
  const std::uint64_t n = x.size();
  SketchPlan plan{n, m, z};
  validate_sketch_plan(plan);
  const std::uint64_t blocks = n / z;
  long double configs = 1.0L;
  for (std::uint64_t b = 0; b < blocks; ++b) configs *= m;
  for (std::uint64_t i = 0; i < n; ++i) configs *= 2.0L;
  if (configs > static_cast<long double>(kEnumerationGuard)) {
    throw std::invalid_argument(
        "exhaustive_moments: placement count exceeds the enumeration guard");
  }

  HashDraw draw;
  draw.block_starts.assign(blocks, 0);
  draw.signs.assign(n, -1);
  const std::uint64_t sign_patterns = std::uint64_t{1} << n;

  // Two passes over every (placement, sign pattern): first the exact mean,
  // then central second moments, accumulated in long double.
  const auto for_each_config = [&](auto&& body) {
    while (true) {
      for (std::uint64_t mask = 0; mask < sign_patterns; ++mask) {
        for (std::uint64_t i = 0; i < n; ++i) {
          draw.signs[i] = (mask >> i) & 1 ? 1 : -1;
        }
        body(draw);
      }
      std::uint64_t b = 0;
      while (b < blocks && ++draw.block_starts[b] == m) {
        draw.block_starts[b] = 0;
        ++b;
      }
      if (b == blocks) break;
    }
  };

  long double total = 0.0L;
  long double count = 0.0L;
  for_each_config([&](const HashDraw& d) {
    total += inner_product_estimate(x, y, plan, d);
    count += 1.0L;
  });
  const long double mean = total / count;
  long double sq = 0.0L;
  for_each_config([&](const HashDraw& d) {
    const long double dev = inner_product_estimate(x, y, plan, d) - mean;
    sq += dev * dev;
  });
  return {static_cast<double>(mean), static_cast<double>(sq / count)};
}

MomentReport embedding_pair_moments(const std::vector<double>& theta,
                                    std::uint64_t a_offset,
                                    std::uint64_t b_offset, std::uint32_t d,
                                    std::uint64_t m, std::uint64_t z,
                                    std::uint64_t trials, std::uint64_t seed) {
  const std::uint64_t n = theta.size();
  SketchPlan plan{n, m, z};
  validate_sketch_plan(plan);
  if (d == 0) throw std::invalid_argument("embedding_pair_moments: d == 0");
  if (a_offset + d > n || b_offset + d > n) {
    throw std::invalid_argument(
        "embedding_pair_moments: embedding slice exceeds the vector");
  }
  const std::uint64_t lo = std::min(a_offset, b_offset);
  const std::uint64_t hi = std::max(a_offset, b_offset);
  if (lo + d > hi) {
    throw std::invalid_argument(
        "embedding_pair_moments: embeddings overlap");
  }
  if (z % d != 0 && d % z != 0) {
    throw std::invalid_argument(
        "embedding_pair_moments: need z | d or d | z");
  }
  if (trials < 2) {
    throw std::invalid_argument("embedding_pair_moments: trials must be >= 2");
  }
  std::vector<double> estimates(trials);
  parallel_chunks(trials, env_threads(), [&](std::size_t t0, std::size_t t1) {
    for (std::size_t t = t0; t < t1; ++t) {
      const HashDraw draw = draw_hash(
          plan, seed ^ static_cast<std::uint64_t>(t), DrawBackend::kRandomOracle);
      const std::vector<double> sketch = project(theta, plan, draw);
      double dot = 0.0;
      for (std::uint32_t k = 0; k < d; ++k) {
        const std::uint64_t ia = a_offset + k;
        const std::uint64_t ib = b_offset + k;
        const double ra = static_cast<double>(draw.signs[ia]) *
                          sketch[draw_slot(plan, draw, ia)];
        const double rb = static_cast<double>(draw.signs[ib]) *
                          sketch[draw_slot(plan, draw, ib)];
        dot += ra * rb;
      }
      estimates[t] = dot;
    }
  });
  return summarize(estimates);
}

double embedding_pair_variance_envelope(const std::vector<double>& theta,
                                        std::uint64_t a_offset,
                                        std::uint64_t b_offset,
                                        std::uint32_t d, std::uint64_t m) {
  if (a_offset + d > theta.size() || b_offset + d > theta.size()) {
    throw std::invalid_argument(
        "embedding_pair_variance_envelope: slice exceeds the vector");
  }
  double norm_sq = 0.0;
  for (double v : theta) norm_sq += v * v;
  double cross_lin = 0.0, cross_diag = 0.0;
  for (std::uint32_t k = 0; k < d; ++k) {
    const double prod = theta[a_offset + k] * theta[b_offset + k];
    cross_lin += prod;
    cross_diag += prod * prod;
  }
  const double cross = cross_lin * cross_lin - cross_diag;
  const double m_sq = static_cast<double>(m) * static_cast<double>(m);
  return static_cast<double>(d) / m_sq * norm_sq * norm_sq +
         std::fabs(cross) / m_sq;
}

double variance_ratio_approx(std::uint64_t n, std::uint64_t m,
                             std::uint64_t z) {
  if (n <= 1) throw std::invalid_argument("variance_ratio_approx: n must exceed 1");
  if (z < 1) throw std::invalid_argument("variance_ratio_approx: z must be positive");
  if (m + 1 <= z) {
    throw std::invalid_argument("variance_ratio_approx: need m > z - 1");
  }
  const double alpha =
      static_cast<double>(z - 1) / static_cast<double>(m);
  const double beta = static_cast<double>(m) / static_cast<double>(n - 1);
  return alpha / (1.0 - alpha) * (1.0 - beta);
}

}  // namespace robe
