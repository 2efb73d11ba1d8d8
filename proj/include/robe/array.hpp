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

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "robe/hash.hpp"
#include "robe/util.hpp"

namespace robe {

// One virtual embedding table: `vocab_size` rows of `dim` learned values.
// The rows are never stored; they are materialized on demand from the
// shared circular parameter array.
struct TableSpec {
  std::uint32_t table_id = 0;  // must equal the table's position in the plan
  std::uint64_t vocab_size = 0;
  std::uint32_t dim = 0;
};

enum class HashBackend : std::uint32_t {
  kUniversal = 0,     // affine universal hash, the production path
  kRandomOracle = 1,  // seeded PRF, used when verifying the theory
};

// A contiguous run of slots in the circular array. Runs never wrap:
// a block that crosses the end of the array is reported as two segments.
struct Segment {
  std::uint64_t start = 0;
  std::uint64_t len = 0;
};

// The allocation scheme shared by every table: array size m, block size z,
// the table shapes, and the seeds/coefficients of the index and sign hashes.
struct RobePlan {
  std::uint64_t m = 0;
  std::uint64_t z = 1;
  std::vector<TableSpec> tables;
  HashBackend backend = HashBackend::kUniversal;
  bool sign_enabled = false;

  std::uint64_t index_seed = 0;
  std::uint64_t sign_seed = 0;
  HashParams index_hash;  // range m, used by the universal backend
  HashParams sign_hash;   // range 2, used by the universal backend

  // Plans with hand-picked coefficients (see make_injective_plan) cannot be
  // reconstructed from seeds alone and are rejected by save_robe_array.
  bool custom_params = false;
};

// Builds a plan with hash coefficients derived deterministically from `seed`.
// Throws std::invalid_argument on m < 1, z < 1, z > m, empty tables,
// zero-sized tables, or table_id not matching its position.
RobePlan make_plan(std::uint64_t m, std::uint64_t z,
                   std::vector<TableSpec> tables, std::uint64_t seed,
                   HashBackend backend = HashBackend::kUniversal,
                   bool sign_enabled = false);

// Builds a collision-free plan for uniform tables (all the same vocab and
// dim): z = dim, m = tables * vocab * dim, and an index hash that lays rows
// out end to end. Lookups then read back exactly what was stored, which
// makes the plan interchangeable with an uncompressed table of equal size.
// Throws std::invalid_argument if the tables are not uniform.
RobePlan make_injective_plan(std::vector<TableSpec> tables);

// Slot of the first element of block `block_id` of row (e, x).
std::uint64_t block_start(const RobePlan& plan, std::uint32_t e,
                          std::uint64_t x, std::uint64_t block_id);

// Sign applied to element i of row (e, x); +1 whenever signs are disabled.
int element_sign(const RobePlan& plan, std::uint32_t e, std::uint64_t x,
                 std::uint32_t i);

// Slot of element i of row (e, x): (block_start + i mod z) mod m.
// Throws std::out_of_range on invalid e, x, or i.
std::uint64_t index_of(const RobePlan& plan, std::uint32_t e, std::uint64_t x,
                       std::uint32_t i);

// The slot runs covering row (e, x), in element order. Each block yields one
// segment, or two when it wraps past the end of the array; the segment
// lengths sum to dim(e).
std::vector<Segment> block_segments(const RobePlan& plan, std::uint32_t e,
                                    std::uint64_t x);

// The learned parameters paired with their allocation scheme.
struct RobeArray {
  RobePlan plan;
  std::vector<double> weights;
};

// Zero-initialized array for the plan.
RobeArray make_array(RobePlan plan);

// Fills weights uniformly in [-1/sqrt(D_max), +1/sqrt(D_max)] where D_max is
// the largest table dim; deterministic in `seed`.
void init_weights(RobeArray& array, std::uint64_t seed);

// Materializes row (e, x): result[i] = sign(e,x,i) * weights[index_of(e,x,i)].
std::vector<double> lookup_embedding(const RobeArray& array, std::uint32_t e,
                                     std::uint64_t x);

// Same, writing into caller storage of length dim(e). No allocation.
void lookup_embedding_into(const RobeArray& array, std::uint32_t e,
                           std::uint64_t x, double* out);

// Scatter-add of an upstream row gradient into a dense length-m buffer:
// grad[index_of(e,x,i)] += sign(e,x,i) * upstream[i].
void accumulate_gradient(std::vector<double>& grad_buffer,
                         const RobePlan& plan, std::uint32_t e,
                         std::uint64_t x,
                         const std::vector<double>& upstream);

using Query = std::pair<std::uint32_t, std::uint64_t>;  // (table, token)

// Elementwise lookup_embedding, order preserving. May read in parallel; the
// result is independent of the thread count. A bad query fails the whole
// batch with its position in the error message.
std::vector<std::vector<double>> lookup_batch(const RobeArray& array,
                                              const std::vector<Query>& queries);

struct BatchUpdate {
  std::uint32_t table = 0;
  std::uint64_t token = 0;
  std::vector<double> upstream;
};

// Applies every update to the buffer. Equivalent to sequential
// accumulate_gradient calls up to floating-point reassociation, and
// bit-identical across runs and thread counts: updates are split into a
// fixed number of contiguous chunks, each chunk is accumulated privately in
// list order, and the chunk buffers are merged slot by slot in chunk order.
void accumulate_batch(std::vector<double>& grad_buffer, const RobePlan& plan,
                      const std::vector<BatchUpdate>& updates);

namespace detail {

// Number of private buffers used by the deterministic scatter merge. Fixed so
// that the merge order depends only on the update count, never on threads.
inline constexpr std::size_t kScatterChunks = 16;

// Scatters `updates` into `grad` through a fixed-chunk merge: the update list
// is split into kScatterChunks contiguous chunks, each accumulated privately
// in list order, and the private buffers are added slot by slot in chunk
// order. slot_of(u, i) and sign_of(u, i) address element i of update u.
template <typename SlotFn, typename SignFn>
void scatter_chunked(std::vector<double>& grad,
                     const std::vector<BatchUpdate>& updates, SlotFn&& slot_of,
                     SignFn&& sign_of) {
  if (updates.empty()) return;
  const std::size_t chunks = std::min(kScatterChunks, updates.size());
  if (chunks == 1) {
    const BatchUpdate& u = updates.front();
    for (std::size_t i = 0; i < u.upstream.size(); ++i) {
      grad[slot_of(u, i)] +=
          static_cast<double>(sign_of(u, i)) * u.upstream[i];
    }
    return;
  }
  std::vector<std::vector<double>> parts(
      chunks, std::vector<double>(grad.size(), 0.0));
  parallel_chunks(chunks, env_threads(), [&](std::size_t c0, std::size_t c1) {
    for (std::size_t c = c0; c < c1; ++c) {
      const std::size_t lo = updates.size() * c / chunks;
      const std::size_t hi = updates.size() * (c + 1) / chunks;
      std::vector<double>& part = parts[c];
      for (std::size_t q = lo; q < hi; ++q) {
        const BatchUpdate& u = updates[q];
        for (std::size_t i = 0; i < u.upstream.size(); ++i) {
          part[slot_of(u, i)] +=
              static_cast<double>(sign_of(u, i)) * u.upstream[i];
        }
      }
    }
  });
  for (std::size_t j = 0; j < grad.size(); ++j) {
    double acc = grad[j];
    for (std::size_t c = 0; c < chunks; ++c) acc += parts[c][j];
    grad[j] = acc;
  }
}

}  // namespace detail

// Sum over tables of vocab_size * dim: the parameter count of the
// uncompressed tables the plan stands in for.
std::uint64_t total_virtual_params(const RobePlan& plan);

// total_virtual_params / m.
double compression_ratio(const RobePlan& plan);

// Binary serialization. Layout (all integers little-endian):
//   magic "ROBE" | version u32 | m u64 | z u64 | table count u32 |
//   per table: vocab u64, dim u32 | index seed u64 | sign seed u64 |
//   flags u32 (bit 0: signs enabled, bit 1: random-oracle backend) |
//   m doubles (IEEE-754 binary64, little-endian)
// Round trips are bit exact. Plans with custom_params set are rejected
// because their coefficients are not derivable from the stored seeds.
void save_robe_array(const RobeArray& array, const std::string& path);
RobeArray load_robe_array(const std::string& path);

}  // namespace robe
