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

#include "robe/util.hpp"

namespace robe {

/// Default modulus for the universal hash family: 2^31 - 1 (Mersenne prime).
inline constexpr std::uint64_t kDefaultPrime = 2147483647ULL;

/// Coefficients of one affine universal hash
///   ((a*u + b*v + c*w + d) mod p) mod range.
///
/// Invariants: p prime, p > range >= 1, a/b/c in [1, p-1], d in [0, p-1].
/// `seed` records the draw that produced the coefficients; identical seeds
/// reproduce identical coefficients.
struct HashParams {
  std::uint64_t a = 1;
  std::uint64_t b = 1;
  std::uint64_t c = 1;
  std::uint64_t d = 0;
  std::uint64_t p = kDefaultPrime;
  std::uint64_t range = 1;
  std::uint64_t seed = 0;
};

/// Deterministic Miller-Rabin, exact for all 64-bit inputs.
bool is_prime_u64(std::uint64_t n);

/// Draws hash coefficients from a seeded stream.
/// Throws std::invalid_argument if p is not prime or range is not in [1, p).
HashParams sample_hash_params(std::uint64_t seed, std::uint64_t p,
                              std::uint64_t range);

/// ((a*u + b*v + c*w + d) mod p) mod range, evaluated in 128-bit
/// intermediates so no operand combination can overflow.
std::uint64_t uhash3(const HashParams& params, std::uint64_t u,
                     std::uint64_t v, std::uint64_t w);

/// Sign hash: 2*uhash3(params, e, x, i) - 1 with params.range == 2, i.e. a
/// deterministic value in {-1, +1}. Throws if params.range != 2.
int sign_hash(const HashParams& params, std::uint64_t e, std::uint64_t x,
              std::uint64_t i);

/// Seeded pseudorandom-function hash: a stateless stand-in for a fully
/// random function, used where analyses assume ideal hashing. Deterministic
/// in (seed, u, v, w, range); uniform on [0, range) to PRF quality.
inline std::uint64_t random_oracle_hash(std::uint64_t seed, std::uint64_t u,
                                        std::uint64_t v, std::uint64_t w,
                                        std::uint64_t range) {
  std::uint64_t h = seed + 0x9e3779b97f4a7c15ULL;
  h = mix64(h ^ (u + 0x9e3779b97f4a7c15ULL));
  h = mix64(h ^ (v + 0xc2b2ae3d27d4eb4fULL));
  h = mix64(h ^ (w + 0x165667b19e3779f9ULL));
  return mix64(h) % range;
}

/// Sign variant of the oracle hash, in {-1, +1}.
inline int random_oracle_sign(std::uint64_t seed, std::uint64_t e,
                              std::uint64_t x, std::uint64_t i) {
  return 2 * static_cast<int>(random_oracle_hash(seed, e, x, i, 2)) - 1;
}

}  // namespace robe
