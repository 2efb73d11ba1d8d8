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

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <thread>
#include <vector>

namespace robe {

/// splitmix64 finalizer. Full-avalanche mixing of a 64-bit word.
inline std::uint64_t mix64(std::uint64_t h) {
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

/// Minimal counter-based random stream (splitmix64). Used everywhere a
/// seeded, platform-independent draw sequence is needed; std distributions
/// are avoided because their output is not pinned by the standard.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix64(state_);
  }

  /// Uniform double in [0, 1) with 53 random bits.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [0, bound). Modulo bias is < bound / 2^64.
  std::uint64_t next_below(std::uint64_t bound) { return next_u64() % bound; }

  /// Standard normal via Box-Muller (pairs cached).
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u = 0.0;
    do {
      u = next_double();
    } while (u <= 0.0);
    double v = next_double();
    double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(6.283185307179586476925287 * v);
    have_spare_ = true;
    return r * std::cos(6.283185307179586476925287 * v);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Fisher-Yates shuffle driven by RandomStream, so that shuffled orders are
/// identical across standard libraries.
template <typename T>
void deterministic_shuffle(std::vector<T>& items, std::uint64_t seed) {
  RandomStream rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.next_below(i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Worker count: ROBE_THREADS if set (clamped to [1, 256]), else 1.
inline unsigned env_threads() {
  const char* v = std::getenv("ROBE_THREADS");
  if (v == nullptr) return 1;
  long n = std::strtol(v, nullptr, 10);
  if (n < 1) return 1;
  if (n > 256) return 256;
  return static_cast<unsigned>(n);
}

/// Runs fn(begin, end) over contiguous index chunks on `threads` workers.
/// Chunk boundaries depend only on (count, threads), so writes into
/// disjoint index ranges are reproducible for a fixed thread count.
template <typename Fn>
void parallel_chunks(std::size_t count, unsigned threads, Fn&& fn) {
  if (threads <= 1 || count < 2) {
    fn(std::size_t{0}, count);
    return;
  }
  if (threads > count) threads = static_cast<unsigned>(count);
  std::vector<std::thread> pool;
  pool.reserve(threads);
  std::size_t chunk = (count + threads - 1) / threads;
  for (unsigned t = 0; t < threads; ++t) {
    std::size_t lo = static_cast<std::size_t>(t) * chunk;
    std::size_t hi = lo + chunk < count ? lo + chunk : count;
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& th : pool) th.join();
}

}  // namespace robe
