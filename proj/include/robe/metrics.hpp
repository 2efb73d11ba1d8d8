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
#include <vector>

namespace robe {

// Probabilities are clamped into [kProbClamp, 1 - kProbClamp] before taking
// logs, keeping the loss finite without measurable bias.
inline constexpr double kProbClamp = 1e-12;

// Area under the ROC curve by the rank statistic, with tied scores assigned
// their average rank. Throws std::invalid_argument on empty input, length
// mismatch, or a single-class label set (AUC undefined).
double auc_score(const std::vector<int>& labels,
                 const std::vector<double>& scores);

// Mean binary cross-entropy of clamped probabilities against 0/1 labels.
// Throws std::invalid_argument on empty input or length mismatch.
double log_loss(const std::vector<int>& labels,
                const std::vector<double>& probs);

}  // namespace robe
