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

#include "vflpi/attack.h"

#include <sstream>

#include "format_util.h"

namespace vflpi {

Matrix BuildJ(int k) {
  Require(k >= 2, "J needs k >= 2");
  Matrix J = Matrix::Zero(k - 1, k);
  for (int m = 0; m < k - 1; ++m) {
    J(m, m) = -1.0;
    J(m, m + 1) = 1.0;
  }
  return J;
}

AttackSystem FormSystem(const Matrix& J, const Matrix& W_pas,
                        const Matrix& W_act, const Vector& b,
                        const Vector& active_y, const Vector& c_prime) {
  Require(J.cols() == W_pas.rows() && J.cols() == b.size(),
          "J must have k columns");
  Require(W_act.rows() == W_pas.rows(), "W_act and W_pas differ in k");
  Require(W_act.cols() == active_y.size(),
          "active feature vector has the wrong length");
  Require(c_prime.size() == J.rows(), "c' must have k-1 entries");
  AttackSystem sys;
  sys.A = J * W_pas;
  sys.b_prime = c_prime - J * (W_act * active_y) - J * b;
  return sys;
}

AttackSystem FormSystem(const PartitionedModel& pm, const Vector& active_y,
                        const Vector& c_prime) {
  return FormSystem(BuildJ(static_cast<int>(pm.b.size())), pm.W_pas, pm.W_act,
                    pm.b, active_y, c_prime);
}

Matrix PseudoInverse(const Matrix& A) {
  if (A.size() == 0) return Matrix::Zero(A.cols(), A.rows());
  Eigen::JacobiSVD<Matrix> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cutoff = s.size() > 0 ? kRankTolerance * s(0) : 0.0;
  Vector inv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Index NumericalRank(const Matrix& A) {
  if (A.size() == 0) return 0;
  Eigen::JacobiSVD<Matrix> svd(A);
  const Vector& s = svd.singularValues();
  Index r = 0;
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > kRankTolerance * s(0) && s(i) > 0.0) ++r;
  }
  return r;
}

LeastSquaresSolver::LeastSquaresSolver(const Matrix& A) : A_(A) {
  Require(A.cols() >= 1, "empty system");
  Require(A.cols() < A.rows() + 1,
          "least squares needs d < k (d=" + std::to_string(A.cols()) + ")");
  const Index rank = NumericalRank(A);
  if (rank < A.cols()) throw RankDeficientError(rank, A.cols());
  qr_.compute(A);
}

Vector LeastSquaresSolver::Solve(const Vector& b_prime) const {
  Require(b_prime.size() == A_.rows(), "b' has the wrong length");
  return qr_.solve(b_prime);
}

HalfStarSolver::HalfStarSolver(const Matrix& A) {
  pinv_ = PseudoInverse(A);
  projector_ = pinv_ * A;
  const Index d = A.cols();
  offset_ = 0.5 * (Matrix::Identity(d, d) - projector_) * Vector::Ones(d);
}

Vector HalfStarSolver::Solve(const Vector& b_prime) const {
  Require(b_prime.size() == pinv_.cols(), "b' has the wrong length");
  return pinv_ * b_prime + offset_;
}

Vector LeastSquaresEstimate(const AttackSystem& sys) {
  return LeastSquaresSolver(sys.A).Solve(sys.b_prime);
}

Vector HalfStarEstimate(const AttackSystem& sys) {
  return HalfStarSolver(sys.A).Solve(sys.b_prime);
}

Vector ClipToBox(const Vector& x) { return x.cwiseMax(0.0).cwiseMin(1.0); }

double EmpiricalMse(const Matrix& x_true, const Matrix& x_hat) {
  Require(x_true.rows() == x_hat.rows() && x_true.cols() == x_hat.cols(),
          "estimate and truth differ in shape");
  Require(x_true.size() > 0, "MSE of an empty set");
  return (x_true - x_hat).squaredNorm() / static_cast<double>(x_true.size());
}

double AnalyticMseLs(const Matrix& A, const Matrix& K_cc) {
  Require(K_cc.rows() == A.rows() && K_cc.cols() == A.rows(),
          "K_cc must be (k-1) x (k-1)");
  const Index d = A.cols();
  const Index rank = NumericalRank(A);
  if (rank < d) throw RankDeficientError(rank, d);
  const Matrix gram_inv = (A.transpose() * A).inverse();
  const Matrix core = A * gram_inv * gram_inv * A.transpose();
  return (core * K_cc).trace() / static_cast<double>(d);
}

double AnalyticMseHalfStar(const Matrix& A, const Matrix& K_half,
                           const Matrix& K_cc) {
  const Index d = A.cols();
  Require(K_half.rows() == d && K_half.cols() == d, "K_half must be d x d");
  Require(K_cc.rows() == A.rows() && K_cc.cols() == A.rows(),
          "K_cc must be (k-1) x (k-1)");
  const Matrix pinv = PseudoInverse(A);
  const Matrix residual = Matrix::Identity(d, d) - pinv * A;
  return ((residual * K_half).trace() +
          (pinv.transpose() * pinv * K_cc).trace()) /
         static_cast<double>(d);
}

ScoreGapStats GapStats(const Matrix& c_prime, const Matrix& c_prime_hat) {
  Require(c_prime.rows() == c_prime_hat.rows() &&
              c_prime.cols() == c_prime_hat.cols(),
          "score pairs differ in shape");
  Require(c_prime.rows() > 0, "gap statistics of an empty list");
  const Matrix gap = c_prime_hat - c_prime;
  ScoreGapStats s;
  s.count = gap.rows();
  s.K_cc = gap.transpose() * gap / static_cast<double>(gap.rows());
  return s;
}

std::string AttackCsvHeader() {
  return "dataset,window_start,d,method,n_p,alpha,beta,mse";
}

std::string AttackCsvRow(const AttackRecord& r) {
  std::ostringstream out;
  out << r.dataset << ',' << r.window_start << ',' << r.d << ',' << r.method
      << ',' << r.n_p << ',' << internal::FormatDouble(r.alpha) << ','
      << internal::FormatDouble(r.beta) << ',' << internal::FormatDouble(r.mse);
  return out.str();
}

}  // namespace vflpi
