// Copyright 2026 The vflpi Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Shared Adam trainer for the plain and the score-refined objectives.

#ifndef VFLPI_SRC_SOFTMAX_FIT_H_
#define VFLPI_SRC_SOFTMAX_FIT_H_

#include <vector>

#include "vflpi/model.h"

namespace vflpi::internal {

// Prediction-phase points seen by the adversary. `scores` (n_p x k) and
// `labels` may each be empty.
struct ObservedTerms {
  Matrix features;
  Matrix scores;
  Labels labels;
  double alpha = 0.0;
  double beta = 0.0;

  Index count() const { return features.rows(); }
};

// ce_weight * sum_{i in rows} H_i
//   + obs_ce_weight * sum_p H_p      (when obs->labels is set)
//   + obs_s_weight * sum_p S_p       (when obs->scores is set)
// Adds the gradient into `grad` when non-null (grad must be zero-shaped).
double SoftmaxObjective(const LRParams& params, const Matrix& features,
                        const Labels& labels, const std::vector<Index>& rows,
                        double ce_weight, const ObservedTerms* obs,
                        double obs_ce_weight, double obs_s_weight,
                        LRParams* grad);

// Full objective over `n` primary rows plus the observed terms:
//   (1/(n+n_p)) [sum H_i + beta sum H_p] + (alpha/n_p) sum S_p.
double RefinedObjective(const LRParams& params, const Matrix& features,
                        const Labels& labels, const std::vector<Index>& rows,
                        const ObservedTerms* obs, LRParams* grad);

// Adam on RefinedObjective with minibatches over the primary rows and the
// whole observed set in every step. With no observed terms this is plain
// cross-entropy training.
LRParams FitSoftmax(const Matrix& features, const Labels& labels, int k,
                    const TrainConfig& cfg, const ObservedTerms* obs);

}  // namespace vflpi::internal

#endif  // VFLPI_SRC_SOFTMAX_FIT_H_
