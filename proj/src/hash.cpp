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

#include "robe/hash.hpp"

#include <stdexcept>

namespace robe {

namespace {

using u128 = unsigned __int128;

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t mod) {
  return static_cast<std::uint64_t>(static_cast<u128>(a) * b % mod);
}

std::uint64_t powmod(std::uint64_t base, std::uint64_t exp,
                     std::uint64_t mod) {
  std::uint64_t acc = 1;
  base %= mod;
  while (exp > 0) {
    if (exp & 1) acc = mulmod(acc, base, mod);
    base = mulmod(base, base, mod);
    exp >>= 1;
  }
  return acc;
}

}  // namespace

bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                          23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  int r = 0;
  while ((d & 1) == 0) {
    d >>= 1;
    ++r;
  }
  // This base set decides primality exactly for every 64-bit integer.
  for (std::uint64_t a : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL,
                          23ULL, 29ULL, 31ULL, 37ULL}) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool witness = true;
    for (int i = 1; i < r; ++i) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        witness = false;
        break;
      }
    }
    if (witness) return false;
  }
  return true;
}

HashParams sample_hash_params(std::uint64_t seed, std::uint64_t p,
                              std::uint64_t range) {
  if (!is_prime_u64(p)) {
    throw std::invalid_argument("sample_hash_params: modulus is not prime");
  }
  if (range < 1 || range >= p) {
    throw std::invalid_argument(
        "sample_hash_params: range must satisfy 1 <= range < p");
  }
  RandomStream rng(seed);
  HashParams params;
  params.a = 1 + rng.next_below(p - 1);
  params.b = 1 + rng.next_below(p - 1);
  params.c = 1 + rng.next_below(p - 1);
  params.d = rng.next_below(p);
  params.p = p;
  params.range = range;
  params.seed = seed;
  return params;
}

std::uint64_t uhash3(const HashParams& params, std::uint64_t u,
                     std::uint64_t v, std::uint64_t w) {
  u128 acc = static_cast<u128>(params.a) * u;
  acc += static_cast<u128>(params.b) * v;
  acc += static_cast<u128>(params.c) * w;
  acc += params.d;
  return static_cast<std::uint64_t>(acc % params.p) % params.range;
}

int sign_hash(const HashParams& params, std::uint64_t e, std::uint64_t x,
              std::uint64_t i) {
  if (params.range != 2) {
    throw std::invalid_argument("sign_hash: params.range must be 2");
  }
  return 2 * static_cast<int>(uhash3(params, e, x, i)) - 1;
}

}  // namespace robe
