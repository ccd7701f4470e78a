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

#include "vflpi/stiefel.h"

#include <cmath>
#include <limits>
#include <random>

#include "vflpi/attack.h"

namespace vflpi {
namespace {

constexpr double kArmijoC = 1e-4;
constexpr int kMaxHalvings = 60;

double Inner(const Matrix& a, const Matrix& b) {
  return (a.array() * b.array()).sum();
}

}  // namespace

Matrix RiemannianGradient(const Matrix& R, const Matrix& G) {
  Require(R.rows() == G.rows() && R.cols() == G.cols(),
          "gradient and point differ in shape");
  return G - R * G.transpose() * R;
}

Matrix Retract(const Matrix& R, const Matrix& step) {
  Require(R.rows() == step.rows() && R.cols() == step.cols(),
          "step and point differ in shape");
  const Matrix Y = R - step;
  Eigen::HouseholderQR<Matrix> qr(Y);
  Matrix Q = qr.householderQ() * Matrix::Identity(Y.rows(), Y.cols());
  const Matrix& packed = qr.matrixQR();
  for (Index j = 0; j < Y.cols(); ++j) {
    if (packed(j, j) < 0.0) Q.col(j) = -Q.col(j);
  }
  return Q;
}

double FeasibilityError(const Matrix& R) {
  return (R.transpose() * R - Matrix::Identity(R.cols(), R.cols())).norm();
}

StiefelResult Minimize(const StiefelProblem& problem, const Matrix& R0) {
  Require(static_cast<bool>(problem.objective) &&
              static_cast<bool>(problem.euclidean_grad),
          "problem needs an objective and a gradient");
  Require(R0.rows() >= R0.cols(), "Stiefel point must be tall or square");
  Require(FeasibilityError(R0) <= 1e-8, "start point is not feasible");

  StiefelResult res;
  res.R = R0;
  res.objective = problem.objective(R0);
  Require(std::isfinite(res.objective), "objective is not finite at start");

  Matrix prev_R, prev_xi;
  double step0 = 1.0;
  for (int it = 0; it < problem.max_iters; ++it) {
    const Matrix G = problem.euclidean_grad(res.R);
    const Matrix xi = RiemannianGradient(res.R, G);
    res.grad_norm = xi.norm();
    res.iterations = it + 1;
    if (res.grad_norm <= problem.tolerance) {
      res.converged = true;
      return res;
    }
    const double slope = Inner(G, xi);
    if (!(slope > 0.0)) {
      // Numerically no descent left along this direction.
      res.converged = res.grad_norm <= std::sqrt(problem.tolerance);
      res.stalled = !res.converged;
      return res;
    }

    if (problem.step_rule == StepRule::kBarzilaiBorwein && prev_R.size()) {
      const Matrix s = res.R - prev_R;
      const Matrix y = xi - prev_xi;
      const double sy = std::abs(Inner(s, y));
      step0 = sy > 0.0 ? Inner(s, s) / sy : 1.0;
      if (!std::isfinite(step0) || step0 <= 0.0) step0 = 1.0;
      step0 = std::min(step0, 1e6);
    } else {
      step0 = 1.0;
    }

    double t = step0;
    bool accepted = false;
    Matrix candidate;
    double f_new = 0.0;
    for (int h = 0; h <= kMaxHalvings; ++h) {
      candidate = Retract(res.R, t * xi);
      f_new = problem.objective(candidate);
      if (std::isfinite(f_new) &&
          f_new <= res.objective - kArmijoC * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      res.stalled = true;
      return res;
    }
    prev_R = res.R;
    prev_xi = xi;
    res.R = candidate;
    res.objective = f_new;
  }
  const Matrix xi =
      RiemannianGradient(res.R, problem.euclidean_grad(res.R));
  res.grad_norm = xi.norm();
  res.converged = res.grad_norm <= problem.tolerance;
  return res;
}

StiefelResult MinimizeMultiStart(const StiefelProblem& problem,
                                 const std::vector<Matrix>& starts) {
  Require(!starts.empty(), "no start points");
  StiefelResult best;
  best.objective = std::numeric_limits<double>::infinity();
  bool have = false;
  for (const Matrix& s : starts) {
    StiefelResult r = Minimize(problem, s);
    if (!have || r.objective < best.objective) {
      best = std::move(r);
      have = true;
    }
  }
  return best;
}

Matrix RandomStiefel(Index n, Index p, std::uint64_t seed) {
  Require(n >= p && p >= 1, "need n >= p >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(n, p);
  for (Index i = 0; i < g.size(); ++i) g(i) = normal(rng);
  return Retract(g, Matrix::Zero(n, p));
}

std::vector<Matrix> DefaultStarts(Index n, Index p, int count,
                                  std::uint64_t seed) {
  Require(count >= 1, "need at least one start");
  std::vector<Matrix> starts;
  const Matrix I = Matrix::Identity(n, p);
  starts.push_back(I);
  if (count >= 2) starts.push_back(-I);
  std::mt19937_64 seeder(seed);
  while (static_cast<int>(starts.size()) < count) {
    starts.push_back(RandomStiefel(n, p, seeder()));
  }
  return starts;
}

Matrix SvdClosedFormLs(const Matrix& A, const Matrix& K0) {
  Require(K0.rows() == A.cols() && K0.cols() == A.cols(),
          "K0 must be d x d");
  const Matrix P = PseudoInverse(A) * A;
  Eigen::JacobiSVD<Matrix> svd(P * K0, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return -svd.matrixU() * svd.matrixV().transpose();
}

double GradientCheck(const StiefelProblem& problem, const Matrix& R,
                     double h) {
  const Matrix G = problem.euclidean_grad(R);
  Matrix fd(R.rows(), R.cols());
  Matrix P = R;
  for (Index i = 0; i < R.size(); ++i) {
    const double orig = P(i);
    P(i) = orig + h;
    const double up = problem.objective(P);
    P(i) = orig - h;
    const double down = problem.objective(P);
    P(i) = orig;
    fd(i) = (up - down) / (2.0 * h);
  }
  const double scale = std::max(G.norm(), fd.norm());
  if (scale == 0.0) return 0.0;
  return (G - fd).norm() / scale;
}

}  // namespace vflpi
