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

// The active party's own models: the adversary model (AM) trained on active
// features alone and the refined model (RAM) that also fits scores or labels
// observed during prediction.

#ifndef VFLPI_ADVERSARY_H_
#define VFLPI_ADVERSARY_H_

#include <optional>
#include <string>
#include <vector>

#include "vflpi/common.h"
#include "vflpi/model.h"

namespace vflpi {

// One prediction-phase query as seen by the active party.
struct Observation {
  Vector active_features;
  std::optional<Vector> score;
  std::optional<int> label;
};

struct RamConfig {
  // Weight of the score-mismatch term.
  double alpha = 1.0;
  // Weight of the cross-entropy on observed labels.
  double beta = 0.0;
  std::vector<Observation> observed;
  TrainConfig base;

  // (alpha, beta) = (1, 0): exact scores observed.
  static RamConfig ForScores(std::vector<Observation> observed,
                             const TrainConfig& base);
  // (alpha, beta) = (0, 1): only class labels observed.
  static RamConfig ForLabels(std::vector<Observation> observed,
                             const TrainConfig& base);
};

// AM: plain training on the active-feature slice.
LRParams TrainAdversaryModel(const Matrix& active_features,
                             const Labels& labels, int k,
                             const TrainConfig& cfg);

// RAM: minimizes
//   (1/(n_t+n_p)) [sum_t H_t + beta sum_p H_p] + (alpha/n_p) sum_p S_p
// from a zero start. With no observations the result equals
// TrainAdversaryModel under the same seed.
LRParams TrainRefinedAdversaryModel(const RamConfig& cfg,
                                    const Matrix& active_features,
                                    const Labels& labels, int k);

// The RAM objective over all training rows, and its gradient.
double RefinedAdversaryObjective(const LRParams& params, const RamConfig& cfg,
                                 const Matrix& active_features,
                                 const Labels& labels);
LRParams RefinedAdversaryGradient(const LRParams& params, const RamConfig& cfg,
                                  const Matrix& active_features,
                                  const Labels& labels);

// S(x, y) = sum_m log^2(x_m / y_m), both clamped to [kProbabilityFloor, 1].
double ScoreMismatch(const Vector& x, const Vector& y);

struct ScoreEstimate {
  Vector c;        // estimated confidence vector
  Vector c_prime;  // its log-ratio vector
};

ScoreEstimate EstimateScore(const LRParams& am, const Vector& active_features);

// JSON list of {"y": [...], "c": [...]?, "u": int?}.
std::string ObservationsToJson(const std::vector<Observation>& observed);
std::vector<Observation> ObservationsFromJson(const std::string& json_text);

}  // namespace vflpi

#endif  // VFLPI_ADVERSARY_H_
