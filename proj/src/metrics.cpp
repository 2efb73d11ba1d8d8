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

#include "robe/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace robe {

double auc_score(const std::vector<int>& labels,
                 const std::vector<double>& scores) {
  if (labels.empty()) {
    throw std::invalid_argument("auc_score: empty input");
  }
  if (labels.size() != scores.size()) {
    throw std::invalid_argument("auc_score: label/score length mismatch");
  }
  const std::size_t n = labels.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  double positives = 0.0, negatives = 0.0, positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    // Ranks are 1-based; a run of tied scores shares its average rank.
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) {
        positives += 1.0;
        positive_rank_sum += avg_rank;
      } else {
        negatives += 1.0;
      }
    }
    i = j;
  }
  if (positives == 0.0 || negatives == 0.0) {
    throw std::invalid_argument(
        "auc_score: AUC is undefined for a single-class label set");
  }
  return (positive_rank_sum - positives * (positives + 1.0) / 2.0) /
         (positives * negatives);
}

double log_loss(const std::vector<int>& labels,
                const std::vector<double>& probs) {
  if (labels.empty()) {
    throw std::invalid_argument("log_loss: empty input");
  }
  if (labels.size() != probs.size()) {
    throw std::invalid_argument("log_loss: label/prob length mismatch");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p =
        std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    total += labels[i] != 0 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(labels.size());
}

}  // namespace robe
