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

// First-order minimization over the Stiefel manifold {R : R^T R = I}.
// Square R gives the orthogonal group; a single column gives the unit
// sphere.

#ifndef VFLPI_STIEFEL_H_
#define VFLPI_STIEFEL_H_

#include <cstdint>
#include <functional>
#include <vector>

#include "vflpi/common.h"

namespace vflpi {

enum class StepRule {
  // Backtracking starts from 1.0 at every iteration.
  kUnit,
  // Backtracking starts from the Barzilai-Borwein step of the last move.
  kBarzilaiBorwein,
};

struct StiefelProblem {
  std::function<double(const Matrix&)> objective;
  std::function<Matrix(const Matrix&)> euclidean_grad;
  // Stop once the Riemannian gradient norm is at or below this.
  double tolerance = 1e-9;
  int max_iters = 10000;
  StepRule step_rule = StepRule::kUnit;
};

struct StiefelResult {
  Matrix R;
  double objective = 0.0;
  int iterations = 0;
  double grad_norm = 0.0;
  bool converged = false;
  // The line search failed to find descent after 60 halvings.
  bool stalled = false;
};

// G - R G^T R: the gradient under the canonical metric.
Matrix RiemannianGradient(const Matrix& R, const Matrix& G);

// Q factor of R - step with the triangular diagonal made positive.
Matrix Retract(const Matrix& R, const Matrix& step);

// ||R^T R - I||_F.
double FeasibilityError(const Matrix& R);

// Riemannian gradient descent with Armijo backtracking (factor 1/2,
// c = 1e-4) and the QR retraction. Objective values never increase.
StiefelResult Minimize(const StiefelProblem& problem, const Matrix& R0);

// Runs Minimize from every start and keeps the lowest objective.
StiefelResult MinimizeMultiStart(const StiefelProblem& problem,
                                 const std::vector<Matrix>& starts);

// I, -I, then Haar-random points until `count` starts (n x p each).
std::vector<Matrix> DefaultStarts(Index n, Index p, int count,
                                  std::uint64_t seed);
// One Haar-distributed n x p point.
Matrix RandomStiefel(Index n, Index p, std::uint64_t seed);

// Minimizer of Tr(R K0 A+ A) over orthogonal R: -U V^T for
// U S V^T = A+ A K0.
Matrix SvdClosedFormLs(const Matrix& A, const Matrix& K0);

// Largest relative error between euclidean_grad(R) and central differences
// of the objective with step h.
double GradientCheck(const StiefelProblem& problem, const Matrix& R,
                     double h = 1e-6);

}  // namespace vflpi

#endif  // VFLPI_STIEFEL_H_
