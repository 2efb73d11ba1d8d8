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

#include "robe/array.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>

namespace robe {

namespace {

// Mersenne prime 2^61 - 1, used when m does not fit under the default prime.
constexpr std::uint64_t kLargePrime = 2305843009213693951ULL;

std::uint64_t choose_prime(std::uint64_t range) {
  return range < kDefaultPrime ? kDefaultPrime : kLargePrime;
}

void validate_tables(const std::vector<TableSpec>& tables) {
  if (tables.empty()) {
    throw std::invalid_argument("plan: at least one table is required");
  }
  for (std::size_t t = 0; t < tables.size(); ++t) {
    if (tables[t].table_id != t) {
      throw std::invalid_argument("plan: table_id " +
                                  std::to_string(tables[t].table_id) +
                                  " does not match its position " +
                                  std::to_string(t));
    }
    if (tables[t].vocab_size == 0 || tables[t].dim == 0) {
      throw std::invalid_argument("plan: table " + std::to_string(t) +
                                  " has zero vocab or dim");
    }
  }
}

void validate_shape(std::uint64_t m, std::uint64_t z) {
  if (m == 0) throw std::invalid_argument("plan: m must be positive");
  if (z == 0) throw std::invalid_argument("plan: z must be positive");
  if (z > m) throw std::invalid_argument("plan: z must not exceed m");
}

// Derives the affine hash coefficients from the stored seeds. Shared by
// make_plan and load_robe_array so a saved plan reconstructs identically.
void finish_plan(RobePlan& plan) {
  plan.index_hash =
      sample_hash_params(plan.index_seed, choose_prime(plan.m), plan.m);
  plan.sign_hash = sample_hash_params(plan.sign_seed, kDefaultPrime, 2);
}

void check_query(const RobePlan& plan, std::uint32_t e, std::uint64_t x) {
  if (e >= plan.tables.size()) {
    throw std::out_of_range("table id " + std::to_string(e) +
                            " out of range (have " +
                            std::to_string(plan.tables.size()) + " tables)");
  }
  if (x >= plan.tables[e].vocab_size) {
    throw std::out_of_range(
        "token " + std::to_string(x) + " out of range for table " +
        std::to_string(e) + " (vocab " +
        std::to_string(plan.tables[e].vocab_size) + ")");
  }
}

// Visits the slot runs of row (e, x) in element order, splitting blocks that
// wrap past the end of the circular array.
template <typename Fn>
void for_each_segment(const RobePlan& plan, std::uint32_t e, std::uint64_t x,
                      Fn&& fn) {
  const std::uint64_t dim = plan.tables[e].dim;
  const std::uint64_t z = plan.z;
  const std::uint64_t m = plan.m;
  const std::uint64_t blocks = (dim + z - 1) / z;
  for (std::uint64_t b = 0; b < blocks; ++b) {
    const std::uint64_t len = std::min(z, dim - b * z);
    const std::uint64_t start = block_start(plan, e, x, b);
    if (start + len <= m) {
      fn(start, len);
    } else {
      fn(start, m - start);
      fn(std::uint64_t{0}, len - (m - start));
    }
  }
}

}  // namespace

RobePlan make_plan(std::uint64_t m, std::uint64_t z,
                   std::vector<TableSpec> tables, std::uint64_t seed,
                   HashBackend backend, bool sign_enabled) {
  validate_shape(m, z);
  validate_tables(tables);
  RobePlan plan;
  plan.m = m;
  plan.z = z;
  plan.tables = std::move(tables);
  plan.backend = backend;
  plan.sign_enabled = sign_enabled;
  RandomStream rng(seed);
  plan.index_seed = rng.next_u64();
  plan.sign_seed = rng.next_u64();
  finish_plan(plan);
  return plan;
}

RobePlan make_injective_plan(std::vector<TableSpec> tables) {
  validate_tables(tables);
  const std::uint64_t vocab = tables.front().vocab_size;
  const std::uint32_t dim = tables.front().dim;
  for (const TableSpec& t : tables) {
    if (t.vocab_size != vocab || t.dim != dim) {
      throw std::invalid_argument(
          "make_injective_plan: tables must share one vocab and dim");
    }
  }
  RobePlan plan;
  plan.m = tables.size() * vocab * dim;
  plan.z = dim;
  plan.tables = std::move(tables);
  plan.backend = HashBackend::kUniversal;
  plan.sign_enabled = false;
  plan.custom_params = true;
  const std::uint64_t p = choose_prime(plan.m);
  if (plan.m >= p) {
    throw std::invalid_argument("make_injective_plan: tables too large");
  }
  // With z = dim there is a single block per row (block id 0), so the start
  // slot is (vocab*dim)*e + dim*x: rows laid out end to end, no collisions.
  plan.index_hash = HashParams{vocab * dim, dim, 1, 0, p, plan.m, 0};
  plan.sign_hash = sample_hash_params(0, kDefaultPrime, 2);
  return plan;
}

std::uint64_t block_start(const RobePlan& plan, std::uint32_t e,
                          std::uint64_t x, std::uint64_t block_id) {
  if (plan.backend == HashBackend::kRandomOracle) {
    return random_oracle_hash(plan.index_seed, e, x, block_id, plan.m);
  }
  return uhash3(plan.index_hash, e, x, block_id);
}

int element_sign(const RobePlan& plan, std::uint32_t e, std::uint64_t x,
                 std::uint32_t i) {
  if (!plan.sign_enabled) return 1;
  if (plan.backend == HashBackend::kRandomOracle) {
    return random_oracle_sign(plan.sign_seed, e, x, i);
  }
  return sign_hash(plan.sign_hash, e, x, i);
}

std::uint64_t index_of(const RobePlan& plan, std::uint32_t e, std::uint64_t x,
                       std::uint32_t i) {
  check_query(plan, e, x);
  if (i >= plan.tables[e].dim) {
    throw std::out_of_range("dim index " + std::to_string(i) +
                            " out of range for table " + std::to_string(e) +
                            " (dim " + std::to_string(plan.tables[e].dim) +
                            ")");
  }
  const std::uint64_t start = block_start(plan, e, x, i / plan.z);
  return (start + i % plan.z) % plan.m;
}

std::vector<Segment> block_segments(const RobePlan& plan, std::uint32_t e,
                                    std::uint64_t x) {
  check_query(plan, e, x);
  std::vector<Segment> segments;
  for_each_segment(plan, e, x, [&](std::uint64_t start, std::uint64_t len) {
    segments.push_back(Segment{start, len});
  });
  return segments;
}

RobeArray make_array(RobePlan plan) {
  RobeArray array;
  array.weights.assign(plan.m, 0.0);
  array.plan = std::move(plan);
  return array;
}

void init_weights(RobeArray& array, std::uint64_t seed) {
  std::uint32_t d_max = 1;
  for (const TableSpec& t : array.plan.tables) d_max = std::max(d_max, t.dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d_max));
  RandomStream rng(seed);
  for (double& w : array.weights) {
    w = (2.0 * rng.next_double() - 1.0) * scale;
  }
}

void lookup_embedding_into(const RobeArray& array, std::uint32_t e,
                           std::uint64_t x, double* out) {
  const RobePlan& plan = array.plan;
  check_query(plan, e, x);
  std::size_t elem = 0;
  for_each_segment(plan, e, x, [&](std::uint64_t start, std::uint64_t len) {
    std::memcpy(out + elem, array.weights.data() + start,
                len * sizeof(double));
    elem += len;
  });
  if (plan.sign_enabled) {
    const std::uint32_t dim = plan.tables[e].dim;
    for (std::uint32_t i = 0; i < dim; ++i) {
      out[i] *= element_sign(plan, e, x, i);
    }
  }
}

std::vector<double> lookup_embedding(const RobeArray& array, std::uint32_t e,
                                     std::uint64_t x) {
  check_query(array.plan, e, x);
  std::vector<double> out(array.plan.tables[e].dim);
  lookup_embedding_into(array, e, x, out.data());
  return out;
}

void accumulate_gradient(std::vector<double>& grad_buffer,
                         const RobePlan& plan, std::uint32_t e,
                         std::uint64_t x,
                         const std::vector<double>& upstream) {
  check_query(plan, e, x);
  if (upstream.size() != plan.tables[e].dim) {
    throw std::invalid_argument("accumulate_gradient: upstream length " +
                                std::to_string(upstream.size()) +
                                " does not match dim " +
                                std::to_string(plan.tables[e].dim));
  }
  if (grad_buffer.size() != plan.m) {
    throw std::invalid_argument("accumulate_gradient: buffer length " +
                                std::to_string(grad_buffer.size()) +
                                " does not match m " +
                                std::to_string(plan.m));
  }
  std::size_t elem = 0;
  for_each_segment(plan, e, x, [&](std::uint64_t start, std::uint64_t len) {
    for (std::uint64_t k = 0; k < len; ++k, ++elem) {
      const int s = plan.sign_enabled
                        ? element_sign(plan, e, x,
                                       static_cast<std::uint32_t>(elem))
                        : 1;
      grad_buffer[start + k] += static_cast<double>(s) * upstream[elem];
    }
  });
}

std::vector<std::vector<double>> lookup_batch(
    const RobeArray& array, const std::vector<Query>& queries) {
  const RobePlan& plan = array.plan;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    try {
      check_query(plan, queries[q].first, queries[q].second);
    } catch (const std::out_of_range& err) {
      throw std::out_of_range("lookup_batch: query " + std::to_string(q) +
                              ": " + err.what());
    }
  }
  std::vector<std::vector<double>> out(queries.size());
  parallel_chunks(queries.size(), env_threads(),
                  [&](std::size_t lo, std::size_t hi) {
                    for (std::size_t q = lo; q < hi; ++q) {
                      out[q] = lookup_embedding(array, queries[q].first,
                                                queries[q].second);
                    }
                  });
  return out;
}

void accumulate_batch(std::vector<double>& grad_buffer, const RobePlan& plan,
                      const std::vector<BatchUpdate>& updates) {
  if (grad_buffer.size() != plan.m) {
    throw std::invalid_argument("accumulate_batch: buffer length " +
                                std::to_string(grad_buffer.size()) +
                                " does not match m " + std::to_string(plan.m));
  }
  for (std::size_t q = 0; q < updates.size(); ++q) {
    try {
      check_query(plan, updates[q].table, updates[q].token);
      if (updates[q].upstream.size() != plan.tables[updates[q].table].dim) {
        throw std::invalid_argument("upstream length mismatch");
      }
    } catch (const std::exception& err) {
      throw std::invalid_argument("accumulate_batch: update " +
                                  std::to_string(q) + ": " + err.what());
    }
  }
  detail::scatter_chunked(
      grad_buffer, updates,
      [&](const BatchUpdate& u, std::size_t i) {
        return index_of(plan, u.table, u.token,
                        static_cast<std::uint32_t>(i));
      },
      [&](const BatchUpdate& u, std::size_t i) {
        return element_sign(plan, u.table, u.token,
                            static_cast<std::uint32_t>(i));
      });
}

std::uint64_t total_virtual_params(const RobePlan& plan) {
  std::uint64_t total = 0;
  for (const TableSpec& t : plan.tables) total += t.vocab_size * t.dim;
  return total;
}

double compression_ratio(const RobePlan& plan) {
  return static_cast<double>(total_virtual_params(plan)) /
         static_cast<double>(plan.m);
}

namespace {

void put_u32(std::ofstream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void put_u64(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint32_t get_u32(std::ifstream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  return v;
}

std::uint64_t get_u64(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

constexpr char kMagic[4] = {'R', 'O', 'B', 'E'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kFlagSign = 1u << 0;
constexpr std::uint32_t kFlagOracle = 1u << 1;

}  // namespace

void save_robe_array(const RobeArray& array, const std::string& path) {
  const RobePlan& plan = array.plan;
  if (plan.custom_params) {
    throw std::invalid_argument(
        "save_robe_array: plans with hand-picked hash coefficients cannot be "
        "serialized (the format stores seeds only)");
  }
  if (array.weights.size() != plan.m) {
    throw std::invalid_argument("save_robe_array: weights length mismatch");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("save_robe_array: cannot open " + path);
  }
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  put_u64(out, plan.m);
  put_u64(out, plan.z);
  put_u32(out, static_cast<std::uint32_t>(plan.tables.size()));
  for (const TableSpec& t : plan.tables) {
    put_u64(out, t.vocab_size);
    put_u32(out, t.dim);
  }
  put_u64(out, plan.index_seed);
  put_u64(out, plan.sign_seed);
  std::uint32_t flags = 0;
  if (plan.sign_enabled) flags |= kFlagSign;
  if (plan.backend == HashBackend::kRandomOracle) flags |= kFlagOracle;
  put_u32(out, flags);
  for (double w : array.weights) {
    put_u64(out, std::bit_cast<std::uint64_t>(w));
  }
  if (!out) {
    throw std::runtime_error("save_robe_array: write failed for " + path);
  }
}

RobeArray load_robe_array(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("load_robe_array: cannot open " + path);
  }
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("load_robe_array: bad magic in " + path);
  }
  const std::uint32_t version = get_u32(in);
  if (version != kVersion) {
    throw std::runtime_error("load_robe_array: unsupported version " +
                             std::to_string(version));
  }
  RobePlan plan;
  plan.m = get_u64(in);
  plan.z = get_u64(in);
  const std::uint32_t n_tables = get_u32(in);
  plan.tables.resize(n_tables);
  for (std::uint32_t t = 0; t < n_tables; ++t) {
    plan.tables[t].table_id = t;
    plan.tables[t].vocab_size = get_u64(in);
    plan.tables[t].dim = get_u32(in);
  }
  plan.index_seed = get_u64(in);
  plan.sign_seed = get_u64(in);
  const std::uint32_t flags = get_u32(in);
  plan.sign_enabled = (flags & kFlagSign) != 0;
  plan.backend = (flags & kFlagOracle) != 0 ? HashBackend::kRandomOracle
                                            : HashBackend::kUniversal;
  if (!in) {
    throw std::runtime_error("load_robe_array: truncated header in " + path);
  }
  validate_shape(plan.m, plan.z);
  validate_tables(plan.tables);
  finish_plan(plan);
  RobeArray array;
  array.plan = std::move(plan);
  array.weights.resize(array.plan.m);
  for (double& w : array.weights) {
    w = std::bit_cast<double>(get_u64(in));
  }
  if (!in) {
    throw std::runtime_error("load_robe_array: truncated weights in " + path);
  }
  return array;
}

}  // namespace robe
