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
#include <string>
#include <utility>
#include <vector>

namespace robe {

struct Row {
  int label = 0;  // 0 or 1
  std::vector<double> dense;
  std::vector<std::uint64_t> cats;  // one token id per categorical feature
};

struct Dataset {
  std::vector<Row> rows;
  std::vector<std::uint64_t> vocab_sizes;  // one per categorical feature
  std::size_t dense_dim = 0;
  std::string name;
};

// Parses a CSV file with header "label,d0,...,dK,c0,...,cJ" (any number of
// dense d-columns and categorical c-columns, in that order). Labels must be
// 0/1, dense cells real numbers, categorical cells non-negative integers.
// When `declared_vocabs` is empty, vocab sizes are inferred as max token + 1
// per feature; otherwise tokens are validated against it and violations are
// reported with their line number and column. Malformed rows are rejected
// with their line number.
Dataset load_csv_dataset(const std::string& path,
                         const std::vector<std::uint64_t>& declared_vocabs = {});

// Planted factorization-machine generator. Ground-truth embeddings of length
// `embed_dim_truth` are drawn per (feature, token) from a seeded generator;
// each row draws one token per feature uniformly, forms the pairwise-dot
// score s, and samples label ~ Bernoulli(sigmoid((1-noise)*s + noise*g))
// with g independent noise of matching scale. noise = 0 plants the clean
// model; as noise approaches 1 labels decouple from the tokens.
Dataset synth_dataset(std::size_t n_rows, std::size_t n_cat_features,
                      std::uint64_t vocab_size, std::uint32_t embed_dim_truth,
                      double noise, std::uint64_t seed);

// Seeded shuffle followed by a head/tail split: the first fraction of rows
// (rounded down, at least one row on each side when possible) becomes the
// first dataset. Schema fields are copied to both halves.
std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset,
                                          double first_fraction,
                                          std::uint64_t seed);

}  // namespace robe
