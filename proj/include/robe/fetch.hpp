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
#include <map>
#include <vector>

#include "robe/array.hpp"

namespace robe {

// Geometry for the cache-line accounting: all sizes in elements, not bytes.
// alignment_offset is the element offset of slot 0 within its cache line
// (0 means the array starts on a line boundary).
struct FetchModelConfig {
  std::uint64_t d = 0;  // embedding size
  std::uint64_t b = 0;  // cache-line size
  std::uint64_t z = 1;  // block size
  std::uint64_t m = 0;  // array size
  std::uint64_t alignment_offset = 0;
};

enum class FetchScheme {
  kOriginal,  // dense per-row table
  kRobe1,     // per-element hashing (z = 1)
  kRobeZ,     // block hashing
};

// Worst-case cache lines per lookup from the closed-form table:
//   original             (needs b | d)        d/b + 1
//   robe1                                     d
//   robez, z < b < d     (needs z | b, b | d) 2 d/z
//   robez, b < z < d     (needs b | z, z | d) d/b + d/z
//   robez, z >= d        (needs d | z)        floor(d/b) + 2
// Throws std::invalid_argument naming the divisibility condition when no
// row matches. The robez bounds assume the array is line-aligned and b
// divides m, so that a wrapped block's tail run ends on a line boundary.
std::uint64_t fetch_bound(const FetchModelConfig& config, FetchScheme scheme);

struct FetchSummary {
  std::uint64_t max_fetches = 0;
  double mean_fetches = 0.0;
  std::map<std::uint64_t, std::uint64_t> histogram;  // fetch count -> queries
  std::vector<std::uint64_t> per_query;
};

// Counts, for each query, the distinct cache lines touched by the slot runs
// of its row under the plan. Requires plan.z = config.z, plan.m = config.m,
// and every queried table's dim = config.d.
FetchSummary simulate_fetches(const RobePlan& plan,
                              const FetchModelConfig& config,
                              const std::vector<Query>& queries);

}  // namespace robe
