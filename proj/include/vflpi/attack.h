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

// Feature reconstruction from confidence scores. The log-ratio vector of a
// softmax output is linear in the logits, so with W_act, b and the active
// features known, the passive features solve A x = b' with A = J W_pas.

#ifndef VFLPI_ATTACK_H_
#define VFLPI_ATTACK_H_

#include <string>
#include <vector>

#include "vflpi/common.h"
#include "vflpi/model.h"

namespace vflpi {

// (k-1) x k difference operator: row m has -1 at column m and +1 at m+1.
Matrix BuildJ(int k);

struct AttackSystem {
  Matrix A;        // (k-1) x d
  Vector b_prime;  // k-1
};

// A = J W_pas, b' = c' - J W_act y - J b.
AttackSystem FormSystem(const PartitionedModel& pm, const Vector& active_y,
                        const Vector& c_prime);
// Same with an explicit J (any (k-1) x k matrix, e.g. T J) and an explicit
// disclosed passive block (e.g. a distorted W_n).
AttackSystem FormSystem(const Matrix& J, const Matrix& W_pas,
                        const Matrix& W_act, const Vector& b,
                        const Vector& active_y, const Vector& c_prime);

// Relative singular-value cutoff used for numerical rank and pseudoinverse.
inline constexpr double kRankTolerance = 1e-10;

// Moore-Penrose pseudoinverse by SVD; singular values below
// kRankTolerance * sigma_max are treated as zero.
Matrix PseudoInverse(const Matrix& A);
Index NumericalRank(const Matrix& A);

// Least squares by column-pivoted QR. Requires d < k and full column rank,
// else throws RankDeficientError.
class LeastSquaresSolver {
 public:
  explicit LeastSquaresSolver(const Matrix& A);
  Vector Solve(const Vector& b_prime) const;
  const Matrix& A() const { return A_; }

 private:
  Matrix A_;
  Eigen::ColPivHouseholderQR<Matrix> qr_;
};

// x = A+ b' + 1/2 (I - A+ A) 1: the solution of A x = b' (in the least
// squares sense) closest to the centre of the unit box.
class HalfStarSolver {
 public:
  explicit HalfStarSolver(const Matrix& A);
  Vector Solve(const Vector& b_prime) const;
  const Matrix& pinv() const { return pinv_; }
  // A+ A.
  const Matrix& projector() const { return projector_; }

 private:
  Matrix pinv_;
  Matrix projector_;
  Vector offset_;
};

Vector LeastSquaresEstimate(const AttackSystem& sys);
Vector HalfStarEstimate(const AttackSystem& sys);

Vector ClipToBox(const Vector& x);

// (1/(N d)) sum_i ||x_i - xhat_i||^2 over matching rows.
double EmpiricalMse(const Matrix& x_true, const Matrix& x_hat);

// (1/d) Tr(A (A^T A)^-2 A^T K_cc).
double AnalyticMseLs(const Matrix& A, const Matrix& K_cc);
// (1/d) Tr((I - A+ A) K_half) + (1/d) Tr(A+^T A+ K_cc).
double AnalyticMseHalfStar(const Matrix& A, const Matrix& K_half,
                           const Matrix& K_cc);

struct ScoreGapStats {
  Matrix K_cc;  // E[(chat' - c')(chat' - c')^T]
  Index count = 0;
};

// Rows of `c_prime` and `c_prime_hat` are paired samples.
ScoreGapStats GapStats(const Matrix& c_prime, const Matrix& c_prime_hat);

// One output line of an attack grid.
struct AttackRecord {
  std::string dataset;
  Index window_start = 0;  // -1 for an average over windows
  Index d = 0;
  std::string method;
  Index n_p = 0;
  double alpha = 0.0;
  double beta = 0.0;
  double mse = 0.0;
};

std::string AttackCsvHeader();
std::string AttackCsvRow(const AttackRecord& r);

}  // namespace vflpi

#endif  // VFLPI_ATTACK_H_
