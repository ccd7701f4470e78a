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

// Multinomial logistic regression: training, scoring, and the split of a
// jointly trained model between the two parties.

#ifndef VFLPI_MODEL_H_
#define VFLPI_MODEL_H_

#include <cstdint>
#include <string>
#include <vector>

#include "vflpi/common.h"
#include "vflpi/data.h"

namespace vflpi {

// Probabilities are clamped to this floor before any logarithm.
inline constexpr double kProbabilityFloor = 1e-12;

struct LRParams {
  Matrix W;  // k x d_f
  Vector b;  // k

  int k() const { return static_cast<int>(W.rows()); }
  Index dims() const { return W.cols(); }
};

struct TrainConfig {
  double learning_rate = 1e-2;
  int max_epochs = 200;
  int patience = 10;
  double validation_fraction = 0.2;
  // Rows per Adam step; 0 means full batch.
  Index batch_size = 64;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

// Fits W, b by minimizing mean cross-entropy with Adam from a zero start.
// A seeded `validation_fraction` of the rows is held out; training stops
// after `patience` epochs without a validation improvement and the best
// parameters are returned. Throws DivergenceError on a non-finite loss.
LRParams Train(const Matrix& features, const Labels& labels, int k,
               const TrainConfig& cfg);

// Numerically stable softmax.
Vector Softmax(const Vector& z);
// softmax(W x + b).
Vector Confidence(const LRParams& params, const Vector& x);
// One confidence vector per row of `features`, as rows.
Matrix Confidences(const LRParams& params, const Matrix& features);
// c'_m = ln(c_{m+1} / c_m) with c clamped to [kProbabilityFloor, 1].
Vector LogRatio(const Vector& c);
// Argmax class, lowest index on ties.
int Predict(const LRParams& params, const Vector& x);
double Accuracy(const LRParams& params, const Matrix& features,
                const Labels& labels);

// Mean cross-entropy and its gradient (same shapes as `params`).
double CrossEntropy(const LRParams& params, const Matrix& features,
                    const Labels& labels);
LRParams CrossEntropyGradient(const LRParams& params, const Matrix& features,
                              const Labels& labels);

struct PartitionedModel {
  Matrix W_act;  // k x (d_t - d), columns in partition.active order
  Matrix W_pas;  // k x d, columns in partition.passive order
  Vector b;
  Partition partition;
};

PartitionedModel PartitionParams(const LRParams& params,
                                 const Partition& partition);
// Inverse of PartitionParams.
LRParams Reassemble(const PartitionedModel& pm);

// {"k", "d_f", "W" (row-major), "b", "feature_indices"}.
std::string ModelToJson(const LRParams& params,
                        const std::vector<Index>& feature_indices);
LRParams ModelFromJson(const std::string& json_text,
                       std::vector<Index>* feature_indices = nullptr);

}  // namespace vflpi

#endif  // VFLPI_MODEL_H_
