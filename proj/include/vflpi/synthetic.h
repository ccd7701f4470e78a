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

// Synthetic tabular data: a Gaussian copula with per-feature marginals and
// labels drawn from a random multinomial logistic teacher.

#ifndef VFLPI_SYNTHETIC_H_
#define VFLPI_SYNTHETIC_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vflpi/common.h"
#include "vflpi/data.h"

namespace vflpi {

enum class Marginal {
  kUniform,    // Phi(z), Uniform[0,1]
  kNormal,     // 0.5 + z/6 clamped to [0,1]
  kBernoulli,  // 1 if Phi(z) < p
};

struct SyntheticSpec {
  Index n = 10000;
  Index d_t = 8;
  int k = 3;
  // Equicorrelation of the latent Gaussian; ignored when `correlation` is set.
  double rho = 0.0;
  std::optional<Matrix> correlation;
  // One entry per feature, or empty for all-uniform.
  std::vector<Marginal> marginals;
  double bernoulli_p = 0.5;
  // Scale of the teacher logits.
  double signal = 4.0;
  std::uint64_t seed = 0;
};

// Samples a dataset whose features already lie in [0,1].
Dataset GenerateSynthetic(const SyntheticSpec& spec);

// JSON keys: n, d_t, k, rho, correlation (nested rows), marginals (list of
// "uniform" | "normal" | "bernoulli"), bernoulli_p, signal, seed.
SyntheticSpec SyntheticSpecFromJson(const std::string& json_text);
std::string SyntheticSpecToJson(const SyntheticSpec& spec);

}  // namespace vflpi

#endif  // VFLPI_SYNTHETIC_H_
