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

#include "robe/fetch.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace robe {

namespace {

void validate_config(const FetchModelConfig& config) {
  if (config.d < 1 || config.b < 1 || config.z < 1) {
    throw std::invalid_argument("fetch config: d, b, z must be positive");
  }
  if (config.m < config.z) {
    throw std::invalid_argument("fetch config: m must be at least z");
  }
}

}  // namespace

std::uint64_t fetch_bound(const FetchModelConfig& config, FetchScheme scheme) {
  validate_config(config);
  const std::uint64_t d = config.d, b = config.b, z = config.z;
  switch (scheme) {
    case FetchScheme::kOriginal:
      if (d % b != 0) {
        throw std::invalid_argument(
            "fetch_bound: the original row requires b | d");
      }
      return d / b + 1;
    case FetchScheme::kRobe1:
      return d;
    case FetchScheme::kRobeZ:
      if (z >= d) {
        if (z % d != 0) {
          throw std::invalid_argument(
              "fetch_bound: the z >= d row requires d | z");
        }
        return d / b + 2;
      }
      if (z <= b) {
        if (b % z != 0) {
          throw std::invalid_argument(
              "fetch_bound: the z < b < d row requires z | b");
        }
        if (d % b != 0) {
          throw std::invalid_argument(
              "fetch_bound: the z < b < d row requires b | d");
        }
        return 2 * (d / z);
      }
      // b < z < d
      if (z % b != 0) {
        throw std::invalid_argument(
            "fetch_bound: the b < z < d row requires b | z");
      }
      if (d % z != 0) {
        throw std::invalid_argument(
            "fetch_bound: the b < z < d row requires z | d");
      }
      return d / b + d / z;
  }
  throw std::invalid_argument("fetch_bound: unknown scheme");
}

FetchSummary simulate_fetches(const RobePlan& plan,
                              const FetchModelConfig& config,
                              const std::vector<Query>& queries) {
  validate_config(config);
  if (plan.z != config.z || plan.m != config.m) {
    throw std::invalid_argument(
        "simulate_fetches: plan z/m do not match the fetch config");
  }
  FetchSummary summary;
  summary.per_query.resize(queries.size());
  std::vector<std::uint64_t> lines;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto [e, x] = queries[q];
    if (e >= plan.tables.size() || plan.tables[e].dim != config.d) {
      throw std::invalid_argument("simulate_fetches: query " +
                                  std::to_string(q) +
                                  " targets a table whose dim is not d");
    }
    lines.clear();
    for (const Segment& seg : block_segments(plan, e, x)) {
      const std::uint64_t first = (config.alignment_offset + seg.start) /
                                  config.b;
      const std::uint64_t last =
          (config.alignment_offset + seg.start + seg.len - 1) / config.b;
      for (std::uint64_t line = first; line <= last; ++line) {
        lines.push_back(line);
      }
    }
    std::sort(lines.begin(), lines.end());
    lines.erase(std::unique(lines.begin(), lines.end()), lines.end());
    summary.per_query[q] = lines.size();
  }
  double total = 0.0;
  for (std::uint64_t c : summary.per_query) {
    summary.max_fetches = std::max(summary.max_fetches, c);
    summary.histogram[c] += 1;
    total += static_cast<double>(c);
  }
  summary.mean_fetches =
      queries.empty() ? 0.0 : total / static_cast<double>(queries.size());
  return summary;
}

}  // namespace robe
