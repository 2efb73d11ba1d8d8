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
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "robe/array.hpp"
#include "robe/dataset.hpp"

namespace robe {

enum class BackendKind { kFull, kRobe };

struct ModelConfig {
  std::uint32_t embed_dim = 8;
  BackendKind backend = BackendKind::kFull;
  std::uint64_t m = 0;  // robe backend: array size
  std::uint64_t z = 0;  // robe backend: block size; 0 means embed_dim
  bool use_sign_hash = false;
  double learning_rate = 0.05;
  std::uint32_t epochs = 1;
  std::uint32_t batch_size = 64;
  std::uint64_t seed = 0;
};

struct TrainReport {
  std::vector<double> train_logloss;  // one entry per epoch
  std::vector<double> epoch_seconds;
  double eval_logloss = 0.0;
  double eval_auc = 0.0;
  double lookups_per_second = 0.0;
  double compression = 0.0;  // virtual params / stored params
};

// Raised when the training loss stops being finite.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Where embedding rows live. Both backends share the gradient flow: lookups
// during the forward pass, a scatter-add of per-row upstream gradients, then
// an elementwise SGD step on the stored parameters.
class EmbeddingStore {
 public:
  virtual ~EmbeddingStore() = default;
  virtual std::uint32_t dim() const = 0;
  virtual void lookup_into(std::uint32_t feature, std::uint64_t token,
                           double* out) const = 0;
  virtual void accumulate(const std::vector<BatchUpdate>& updates) = 0;
  // params -= step * grad, then grad is cleared.
  virtual void sgd_step(double step) = 0;
  virtual std::uint64_t stored_params() const = 0;
  virtual std::uint64_t virtual_params() const = 0;
  // Backend peeks for checkpointing and tests; null when not applicable.
  virtual RobeArray* robe_array() { return nullptr; }
  virtual std::vector<double>* flat_params() { return nullptr; }
};

// Dense per-table storage: rows laid out end to end in one flat vector.
std::unique_ptr<EmbeddingStore> make_full_store(
    const std::vector<std::uint64_t>& vocab_sizes, std::uint32_t dim,
    std::uint64_t init_seed);

// Storage backed by a shared circular array under the given plan.
std::unique_ptr<EmbeddingStore> make_robe_store(RobePlan plan,
                                                std::uint64_t init_seed);

// Factorization machine over one embedding per categorical feature:
//   p = sigmoid(bias + w . dense + sum_{f<g} <E_f(x_f), E_g(x_g)>).
struct FmModel {
  std::vector<std::uint64_t> vocab_sizes;
  std::size_t dense_dim = 0;
  std::uint32_t embed_dim = 0;
  std::vector<double> dense_w;
  double bias = 0.0;
  std::unique_ptr<EmbeddingStore> store;
};

// Forward pass for one row. Throws std::invalid_argument when the row does
// not match the model schema.
double predict_row(const FmModel& model, const Row& row);

// (logloss, AUC) over the split. Throws on an empty split; AUC additionally
// requires both classes to be present.
std::pair<double, double> evaluate(const FmModel& model, const Dataset& split);

struct TrainResult {
  TrainReport report;
  FmModel model;
};

// Minibatch SGD on logloss. Deterministic in config.seed for any thread
// count. `plan_override`, when given, replaces the plan the robe backend
// would build from the config (used for collision-free capacity tests).
TrainResult train_model(const ModelConfig& config, const Dataset& train_split,
                        const Dataset& eval_split,
                        const RobePlan* plan_override = nullptr);

// Writes the robe-backed model as the array's binary format at `path` plus a
// JSON sidecar at path + ".json" holding the dense weights, bias, schema,
// and config. Only the robe backend is supported.
void save_checkpoint(const FmModel& model, const ModelConfig& config,
                     const std::string& path);

// Reads back a checkpoint pair written by save_checkpoint.
std::pair<FmModel, ModelConfig> load_checkpoint(const std::string& path);

struct BenchVariant {
  std::string name;
  std::uint64_t z = 0;  // 0 for the full-table variant
  bool hash_only = false;
  double lookups_per_second = 0.0;
  double ratio_vs_robe1 = 0.0;  // 0 when no robe z=1 variant was measured
};

struct BenchReport {
  std::uint32_t d = 0;
  std::uint64_t m = 0;
  std::uint64_t queries = 0;
  std::vector<BenchVariant> variants;
};

// Times embedding lookups over one shared random query stream: a dense full
// table, one robe variant per entry of z_list (all at the same m), and, when
// requested, hash-only passes that skip the memory reads. Wall-clock rates;
// nothing here is asserted beyond being positive.
BenchReport bench_lookup_throughput(std::uint32_t d, std::uint64_t m,
                                    const std::vector<std::uint64_t>& z_list,
                                    std::uint64_t vocab_size,
                                    std::uint64_t n_queries,
                                    std::uint64_t seed, bool include_hash_only);

}  // namespace robe
