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

#include "robe/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "robe/util.hpp"

namespace robe {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream stream(line);
  while (std::getline(stream, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

[[noreturn]] void fail_line(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("csv line " + std::to_string(line_no) + ": " + what);
}

double parse_double(const std::string& cell, std::size_t line_no,
                    const std::string& column) {
  std::size_t pos = 0;
  double value = 0.0;
  try {
    value = std::stod(cell, &pos);
  } catch (const std::exception&) {
    fail_line(line_no, "column " + column + ": not a number: '" + cell + "'");
  }
  if (pos != cell.size()) {
    fail_line(line_no, "column " + column + ": trailing garbage: '" + cell + "'");
  }
  return value;
}

std::uint64_t parse_token(const std::string& cell, std::size_t line_no,
                          const std::string& column) {
  if (cell.empty() || cell.find_first_not_of("0123456789") != std::string::npos) {
    fail_line(line_no,
              "column " + column + ": not a non-negative integer: '" + cell + "'");
  }
  try {
    return std::stoull(cell);
  } catch (const std::exception&) {
    fail_line(line_no, "column " + column + ": token out of range: '" + cell + "'");
  }
}

}  // namespace

Dataset load_csv_dataset(const std::string& path,
                         const std::vector<std::uint64_t>& declared_vocabs) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("load_csv_dataset: cannot open " + path);
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw std::runtime_error("load_csv_dataset: missing header in " + path);
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_csv_line(line);
  if (header.empty() || header[0] != "label") {
    throw std::runtime_error(
        "load_csv_dataset: header must start with 'label'");
  }
  std::size_t dense_dim = 0;
  std::size_t cat_dim = 0;
  std::size_t col = 1;
  while (col < header.size() && header[col] == "d" + std::to_string(col - 1)) {
    ++dense_dim;
    ++col;
  }
  while (col < header.size() &&
         header[col] == "c" + std::to_string(col - 1 - dense_dim)) {
    ++cat_dim;
    ++col;
  }
  if (col != header.size()) {
    throw std::runtime_error(
        "load_csv_dataset: malformed header column '" + header[col] +
        "' (expected label,d0..dK,c0..cJ)");
  }
  if (!declared_vocabs.empty() && declared_vocabs.size() != cat_dim) {
    throw std::runtime_error(
        "load_csv_dataset: schema declares " +
        std::to_string(declared_vocabs.size()) + " vocab sizes but the file has " +
        std::to_string(cat_dim) + " categorical columns");
  }

  Dataset dataset;
  dataset.dense_dim = dense_dim;
  dataset.name = path;
  std::vector<std::uint64_t> max_token(cat_dim, 0);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != 1 + dense_dim + cat_dim) {
      fail_line(line_no, "expected " + std::to_string(1 + dense_dim + cat_dim) +
                             " cells, got " + std::to_string(cells.size()));
    }
    Row row;
    if (cells[0] == "0") {
      row.label = 0;
    } else if (cells[0] == "1") {
      row.label = 1;
    } else {
      fail_line(line_no, "label must be 0 or 1, got '" + cells[0] + "'");
    }
    row.dense.reserve(dense_dim);
    for (std::size_t k = 0; k < dense_dim; ++k) {
      row.dense.push_back(
          parse_double(cells[1 + k], line_no, "d" + std::to_string(k)));
    }
    row.cats.reserve(cat_dim);
    for (std::size_t f = 0; f < cat_dim; ++f) {
      const std::string column = "c" + std::to_string(f);
      const std::uint64_t token =
          parse_token(cells[1 + dense_dim + f], line_no, column);
      if (!declared_vocabs.empty() && token >= declared_vocabs[f]) {
        fail_line(line_no, "column " + column + ": token " +
                               std::to_string(token) +
                               " >= declared vocab " +
                               std::to_string(declared_vocabs[f]));
      }
      max_token[f] = std::max(max_token[f], token);
      row.cats.push_back(token);
    }
    dataset.rows.push_back(std::move(row));
  }
  if (!declared_vocabs.empty()) {
    dataset.vocab_sizes = declared_vocabs;
  } else {
    dataset.vocab_sizes.resize(cat_dim);
    for (std::size_t f = 0; f < cat_dim; ++f) {
      dataset.vocab_sizes[f] = dataset.rows.empty() ? 1 : max_token[f] + 1;
    }
  }
  return dataset;
}

Dataset synth_dataset(std::size_t n_rows, std::size_t n_cat_features,
                      std::uint64_t vocab_size, std::uint32_t embed_dim_truth,
                      double noise, std::uint64_t seed) {
  if (n_rows == 0 || n_cat_features == 0 || vocab_size == 0 ||
      embed_dim_truth == 0) {
    throw std::invalid_argument("synth_dataset: all sizes must be positive");
  }
  if (noise < 0.0 || noise >= 1.0) {
    throw std::invalid_argument("synth_dataset: noise must be in [0, 1)");
  }

  // Ground-truth embeddings, one vector per (feature, token).
  RandomStream truth_rng(mix64(seed ^ 0x74727574685f656dULL));
  std::vector<std::vector<double>> truth(n_cat_features);
  for (std::size_t f = 0; f < n_cat_features; ++f) {
    truth[f].resize(vocab_size * embed_dim_truth);
    for (double& v : truth[f]) v = truth_rng.next_gaussian();
  }
  const auto truth_vec = [&](std::size_t f, std::uint64_t token) {
    return truth[f].data() + token * embed_dim_truth;
  };

  // Pass 1: tokens and clean pairwise-dot scores.
  RandomStream token_rng(mix64(seed ^ 0x746f6b656e735f00ULL));
  Dataset dataset;
  dataset.name = "synth";
  dataset.dense_dim = 0;
  dataset.vocab_sizes.assign(n_cat_features, vocab_size);
  dataset.rows.resize(n_rows);
  std::vector<double> scores(n_rows, 0.0);
  for (std::size_t r = 0; r < n_rows; ++r) {
    Row& row = dataset.rows[r];
    row.cats.resize(n_cat_features);
    for (std::size_t f = 0; f < n_cat_features; ++f) {
      row.cats[f] = token_rng.next_below(vocab_size);
    }
    double score = 0.0;
    for (std::size_t f = 0; f < n_cat_features; ++f) {
      for (std::size_t g = f + 1; g < n_cat_features; ++g) {
        const double* a = truth_vec(f, row.cats[f]);
        const double* b = truth_vec(g, row.cats[g]);
        for (std::uint32_t k = 0; k < embed_dim_truth; ++k) score += a[k] * b[k];
      }
    }
    scores[r] = score;
  }

  // Noise of matching scale so noise -> 1 really drowns the signal.
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= static_cast<double>(n_rows);
  double var = 0.0;
  for (double s : scores) var += (s - mean) * (s - mean);
  var /= static_cast<double>(n_rows);
  const double score_std = var > 0.0 ? std::sqrt(var) : 1.0;

  // Pass 2: labels.
  RandomStream label_rng(mix64(seed ^ 0x6c6162656c735f00ULL));
  for (std::size_t r = 0; r < n_rows; ++r) {
    const double eta = label_rng.next_gaussian() * score_std;
    const double logit = (1.0 - noise) * scores[r] + noise * eta;
    const double p = 1.0 / (1.0 + std::exp(-logit));
    dataset.rows[r].label = label_rng.next_double() < p ? 1 : 0;
  }
  return dataset;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& dataset,
                                          double first_fraction,
                                          std::uint64_t seed) {
  if (first_fraction <= 0.0 || first_fraction >= 1.0) {
    throw std::invalid_argument(
        "split_dataset: first_fraction must be in (0, 1)");
  }
  std::vector<std::size_t> order(dataset.rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  deterministic_shuffle(order, seed);
  std::size_t first_count = static_cast<std::size_t>(
      first_fraction * static_cast<double>(dataset.rows.size()));
  if (dataset.rows.size() >= 2) {
    first_count = std::clamp(first_count, std::size_t{1},
                             dataset.rows.size() - 1);
  }
  Dataset first, second;
  first.vocab_sizes = second.vocab_sizes = dataset.vocab_sizes;
  first.dense_dim = second.dense_dim = dataset.dense_dim;
  first.name = dataset.name + "/train";
  second.name = dataset.name + "/eval";
  first.rows.reserve(first_count);
  second.rows.reserve(dataset.rows.size() - first_count);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < first_count ? first : second).rows.push_back(dataset.rows[order[i]]);
  }
  return {std::move(first), std::move(second)};
}

}  // namespace robe
