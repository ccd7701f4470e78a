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

#include "vflpi/defense.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>

#include "vflpi/attack.h"
#include "vflpi/stiefel.h"

namespace vflpi {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Matrix Gram(const Matrix& W_pas) { return W_pas.transpose() * W_pas; }

double Dk(const Matrix& W_pas) {
  return static_cast<double>(W_pas.rows() * W_pas.cols());
}

void CheckStats(const Matrix& W_pas, const PassiveStats& stats) {
  Require(stats.d() == W_pas.cols(),
          "statistics and W_pas disagree on the passive dimension");
}

double RelativeGap(double g, double epsilon) {
  return epsilon > 0.0 ? std::abs(g - epsilon) / epsilon : std::abs(g);
}

PpsOutcome Undistorted(PpsCase c, const Matrix& W_pas,
                       const PassiveStats& stats) {
  PpsOutcome out;
  out.W_n = W_pas;
  out.pps_case = c;
  out.epsilon = 0.0;
  out.g_achieved = 0.0;
  if (c == PpsCase::kI || c == PpsCase::kII) {
    out.R = Matrix::Identity(W_pas.cols(), W_pas.cols());
  }
  out.mse_predicted = PredictedMse(c, W_pas, W_pas, stats);
  out.diagnostics = "eps=0: no distortion";
  return out;
}

// Shared penalty-continuation driver for the orthogonal cases.
template <typename Obj, typename Grad, typename Mse>
PpsOutcome SolveOrthogonal(PpsCase c, const Matrix& W_pas, double epsilon,
                           const PenaltySchedule& schedule, Obj objective,
                           Grad gradient, Mse mse) {
  Require(schedule.lambda_min > 0 && schedule.lambda_max >= schedule.lambda_min,
          "bad penalty schedule");
  Require(schedule.factor > 1.0, "penalty factor must exceed 1");
  const Index d = W_pas.cols();
  struct Candidate {
    Matrix R;
    double gap;
    double mse;
    double lambda;
    int start;
    int iterations;
  };
  std::vector<Candidate> candidates;
  // O(d) has two components and descent never leaves the one it starts in,
  // so every start is paired with its mirror image.
  auto starts = DefaultStarts(d, d, schedule.starts, schedule.seed);
  const std::size_t base = starts.size();
  for (std::size_t s = 0; s < base; ++s) {
    Matrix mirrored = starts[s];
    mirrored.col(0) *= -1.0;
    starts.push_back(mirrored);
  }
  // Entered at lambda_min, the first stage runs to the unconstrained optimum
  // from every start and the starts stop mattering. Later entry points keep
  // each start near its own piece of the g = eps level set.
  std::vector<double> entries;
  for (int j = 0; j < std::max(schedule.entry_levels, 1); ++j) {
    const double l = schedule.lambda_min *
                     std::pow(schedule.lambda_max / schedule.lambda_min,
                              static_cast<double>(j) / schedule.entry_levels);
    if (j == 0 || l < schedule.lambda_max) entries.push_back(l);
  }
  for (std::size_t run = 0; run < starts.size() * entries.size(); ++run) {
    const std::size_t s = run % starts.size();
    Matrix R = starts[s];
    double lambda = entries[run / starts.size()];
    int iterations = 0;
    double gap = kInf;
    for (;; lambda *= schedule.factor) {
      StiefelProblem p;
      p.objective = [&, lambda](const Matrix& X) {
        return objective(lambda, X);
      };
      p.euclidean_grad = [&, lambda](const Matrix& X) {
        return gradient(lambda, X);
      };
      p.tolerance = 1e-10;
      p.max_iters = 4000;
      p.step_rule = StepRule::kBarzilaiBorwein;
      StiefelResult r = Minimize(p, R);
      R = r.R;
      iterations += r.iterations;
      gap = RelativeGap(InterpretabilityGap(W_pas, W_pas * R), epsilon);
      if (gap <= schedule.target_tolerance ||
          lambda * schedule.factor > schedule.lambda_max * (1 + 1e-12)) {
        break;
      }
    }
    candidates.push_back({R, gap, mse(R), lambda, static_cast<int>(s),
                          iterations});
  }

  const Candidate* best = nullptr;
  for (const auto& cand : candidates) {
    if (cand.gap > schedule.relative_tolerance) continue;
    if (best == nullptr || cand.mse > best->mse) best = &cand;
  }
  PpsOutcome out;
  out.status = PpsStatus::kOk;
  if (best == nullptr) {
    out.status = PpsStatus::kConstraintUnmet;
    for (const auto& cand : candidates) {
      if (best == nullptr || cand.gap < best->gap) best = &cand;
    }
  }
  out.pps_case = c;
  out.epsilon = epsilon;
  out.R = best->R;
  out.W_n = W_pas * best->R;
  out.g_achieved = InterpretabilityGap(W_pas, out.W_n);
  out.mse_predicted = best->mse;
  std::ostringstream diag;
  diag << "start=" << best->start << " lambda=" << best->lambda
       << " iterations=" << best->iterations << " rel_gap=" << best->gap;
  out.diagnostics = diag.str();
  return out;
}

struct SphereSpec {
  Matrix center;  // k x d
  double radius;
  // Objective to maximize at W_n (finite unless rejected).
  std::function<double(const Matrix&)> value;
  // Gradient of `value` with respect to W_n.
  std::function<Matrix(const Matrix&)> grad;
};

Matrix Unvec(const Matrix& u, Index rows, Index cols) {
  return Eigen::Map<const Matrix>(u.data(), rows, cols);
}

Matrix Vec(const Matrix& m) {
  return Eigen::Map<const Matrix>(m.data(), m.size(), 1);
}

// Maximizes spec.value over {center + radius U : ||U||_F = 1}.
struct SphereResult {
  Matrix W_n;
  double value;
  int start;
  int iterations;
};

std::optional<SphereResult> MaximizeOnSphere(
    const SphereSpec& spec, const std::vector<Matrix>& directions) {
  const Index rows = spec.center.rows(), cols = spec.center.cols();
  auto to_w = [&](const Matrix& u) {
    return Matrix(spec.center + spec.radius * Unvec(u, rows, cols));
  };
  StiefelProblem p;
  p.objective = [&](const Matrix& u) { return -spec.value(to_w(u)); };
  p.euclidean_grad = [&](const Matrix& u) {
    return Matrix(-spec.radius * Vec(spec.grad(to_w(u))));
  };
  p.tolerance = 1e-11;
  p.max_iters = 20000;
  p.step_rule = StepRule::kBarzilaiBorwein;

  std::optional<SphereResult> best;
  for (std::size_t s = 0; s < directions.size(); ++s) {
    Matrix u = Vec(directions[s]);
    const double norm = u.norm();
    if (norm == 0.0) continue;
    u /= norm;
    if (!std::isfinite(p.objective(u))) continue;
    StiefelResult r = Minimize(p, u);
    const double value = -r.objective;
    if (!best || value > best->value) {
      best = SphereResult{to_w(r.R), value, static_cast<int>(s), r.iterations};
    }
  }
  return best;
}

// Cases iii and iv score W_n only through A_n = J W_n. Over the constraint
// sphere ||W_n - W_pas||_F^2 = dk eps, A_n sweeps the solid ellipsoid
// {A + L C : ||C||_F <= r} with L L^T = J J^T, and along any ray from the
// origin both objectives peak at an end of the feasible interval, so the
// maximum sits on the ellipsoid surface. We search that surface: it has
// fewer dimensions than the W_n sphere and a dense scan seeds the ascent.
struct ScoreSurfaceSpec {
  Matrix W_pas;
  Matrix J;
  double epsilon;
  // Objective in A_n, -inf when rejected, and its gradient in A_n.
  std::function<double(const Matrix&)> value;
  std::function<Matrix(const Matrix&)> grad;
};

constexpr int kSurfaceScan = 512;
constexpr int kSurfaceScanKeep = 4;

std::optional<SphereResult> MaximizeOnScoreSurface(
    const ScoreSurfaceSpec& surf, const SphereOptions& options) {
  const Matrix A = surf.J * surf.W_pas;
  const Matrix L = (surf.J * surf.J.transpose()).llt().matrixL();
  const Matrix J_pinv = PseudoInverse(surf.J);

  SphereSpec spec;
  spec.center = L.triangularView<Eigen::Lower>().solve(A);
  spec.radius = std::sqrt(Dk(surf.W_pas) * surf.epsilon);
  spec.value = [&](const Matrix& C) { return surf.value(L * C); };
  spec.grad = [&](const Matrix& C) {
    return Matrix(L.transpose() * surf.grad(L * C));
  };

  const Index rows = A.rows(), cols = A.cols();
  std::vector<Matrix> dirs;
  if (spec.center.norm() > 0) {
    dirs.push_back(-spec.center);  // toward A_n = 0
    dirs.push_back(spec.center);
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw = [&] {
    Matrix r(rows, cols);
    for (Index j = 0; j < r.size(); ++j) r(j) = normal(rng);
    return Matrix(r / r.norm());
  };
  std::vector<std::pair<double, Matrix>> scan;
  for (int i = 0; i < kSurfaceScan; ++i) {
    Matrix u = draw();
    const double v = spec.value(spec.center + spec.radius * u);
    if (std::isfinite(v)) scan.emplace_back(v, std::move(u));
  }
  const std::size_t keep =
      std::min<std::size_t>(kSurfaceScanKeep, scan.size());
  std::partial_sort(scan.begin(), scan.begin() + keep, scan.end(),
                    [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; i < keep; ++i) dirs.push_back(scan[i].second);
  for (int i = 0; i < options.random_starts; ++i) dirs.push_back(draw());

  auto best = MaximizeOnSphere(spec, dirs);
  if (best) {
    // Back to parameter space along the minimum-norm lift; it lands exactly
    // on the constraint sphere.
    best->W_n = surf.W_pas + J_pinv * (L * best->W_n - A);
  }
  return best;
}

}  // namespace

PassiveStats ComputePassiveStats(const Matrix& X) {
  Require(X.rows() > 0 && X.cols() > 0, "statistics of an empty matrix");
  const double n = static_cast<double>(X.rows());
  const Index d = X.cols();
  PassiveStats s;
  s.n = X.rows();
  s.mu = X.colwise().mean().transpose();
  s.K0 = X.transpose() * X / n;
  const Matrix centered = X.array() - 0.5;
  s.K_half = centered.transpose() * centered / n;
  s.M = Vector::Ones(d) * (s.mu.array() - 0.25).matrix().transpose();
  s.sigma2 = d == 1 ? s.K0(0, 0) : 0.0;
  return s;
}

const char* PpsCaseName(PpsCase c) {
  switch (c) {
    case PpsCase::kI:
      return "i";
    case PpsCase::kII:
      return "ii";
    case PpsCase::kIII:
      return "iii";
    case PpsCase::kIV:
      return "iv";
  }
  return "i";
}

PpsCase PpsCaseFromName(const std::string& name) {
  if (name == "i") return PpsCase::kI;
  if (name == "ii") return PpsCase::kII;
  if (name == "iii") return PpsCase::kIII;
  if (name == "iv") return PpsCase::kIV;
  throw InvalidArgument("unknown case '" + name + "' (use i, ii, iii, iv)");
}

bool PpsCaseApplies(PpsCase c, Index d, int k) {
  switch (c) {
    case PpsCase::kI:
      return d >= k;
    case PpsCase::kII:
      return d > 1 && d < k;
    case PpsCase::kIII:
      return d == 1 && k >= 2;
    case PpsCase::kIV:
      return k == 2 && d > 1;
  }
  return false;
}

const char* PpsStatusName(PpsStatus s) {
  switch (s) {
    case PpsStatus::kOk:
      return "ok";
    case PpsStatus::kConstraintUnmet:
      return "constraint_unmet";
    case PpsStatus::kUnbounded:
      return "unbounded";
  }
  return "ok";
}

double InterpretabilityGap(const Matrix& W_pas, const Matrix& W_n) {
  Require(W_pas.rows() == W_n.rows() && W_pas.cols() == W_n.cols(),
          "W_pas and W_n differ in shape");
  return (W_pas - W_n).squaredNorm() / Dk(W_pas);
}

double InterpretabilityGapOrthogonal(const Matrix& W_pas, const Matrix& R) {
  const Index d = W_pas.cols();
  Require(R.rows() == d && R.cols() == d, "R must be d x d");
  return 2.0 * ((Matrix::Identity(d, d) - R) * Gram(W_pas)).trace() /
         Dk(W_pas);
}

double PredictedMseCaseI(const Matrix& W_pas, const Matrix& R,
                         const PassiveStats& stats) {
  CheckStats(W_pas, stats);
  const double d = static_cast<double>(W_pas.cols());
  const Matrix A = BuildJ(static_cast<int>(W_pas.rows())) * W_pas;
  const Matrix P = PseudoInverse(A) * A;
  const Matrix inner = stats.K0 - 2.0 * stats.K0 * R.transpose() +
                       R * stats.M * R.transpose();
  return (stats.K_half.trace() + (P * inner).trace()) / d;
}

double PredictedMseCaseII(const Matrix& R, const PassiveStats& stats) {
  Require(R.rows() == stats.d() && R.cols() == stats.d(), "R must be d x d");
  const double d = static_cast<double>(stats.d());
  return 2.0 * (stats.K0 - R * stats.K0).trace() / d;
}

double PredictedMseCaseIII(const Vector& w_pas, const Vector& w_n,
                           double sigma2, const Matrix& J) {
  Require(w_pas.size() == w_n.size() && J.cols() == w_pas.size(),
          "case iii vectors must have k entries");
  const Vector A = J * w_pas;
  const Vector A_n = J * w_n;
  const double q = A_n.squaredNorm();
  if (q == 0.0) return kInf;
  const double rho = A_n.dot(A) / q;
  return sigma2 * (1.0 - rho) * (1.0 - rho);
}

double PredictedMseCaseIV(const Matrix& W_pas, const Matrix& W_n,
                          const PassiveStats& stats, const Matrix& J) {
  CheckStats(W_pas, stats);
  Require(J.rows() == 1, "case iv needs k = 2");
  const double d = static_cast<double>(W_pas.cols());
  const RowVector A = J * W_pas;
  const RowVector A_n = J * W_n;
  const double q = A_n.squaredNorm();
  if (q == 0.0) return kInf;
  const double num = (A * stats.K0 * A.transpose())(0) -
                     2.0 * (A * stats.K0 * A_n.transpose())(0) +
                     (A_n * stats.M * A_n.transpose())(0);
  return stats.K_half.trace() / d + num / (d * q);
}

double DistortedAttackMse(const Matrix& J, const Matrix& W_pas,
                          const Matrix& W_n, const PassiveStats& stats,
                          Estimator estimator) {
  CheckStats(W_pas, stats);
  const Index d = W_pas.cols();
  const Matrix A = J * W_pas;
  const Matrix A_n = J * W_n;
  const Matrix I = Matrix::Identity(d, d);
  // With b' = A x the estimate is x_hat = B A x + offset.
  Matrix B;
  Vector offset = Vector::Zero(d);
  if (estimator == Estimator::kLeastSquares) {
    LeastSquaresSolver solver(A_n);  // rank check
    B = (A_n.transpose() * A_n).ldlt().solve(A_n.transpose());
  } else {
    B = PseudoInverse(A_n);
    offset = 0.5 * (I - B * A_n) * Vector::Ones(d);
  }
  // e = C x - offset.
  const Matrix C = I - B * A;
  const double second = (C * stats.K0 * C.transpose()).trace() -
                        2.0 * offset.dot(C * stats.mu) + offset.squaredNorm();
  return second / static_cast<double>(d);
}

double PredictedMse(PpsCase c, const Matrix& W_pas, const Matrix& W_n,
                    const PassiveStats& stats, const Matrix& J) {
  switch (c) {
    case PpsCase::kI:
      return DistortedAttackMse(J, W_pas, W_n, stats, Estimator::kHalfStar);
    case PpsCase::kII:
      return DistortedAttackMse(J, W_pas, W_n, stats,
                                Estimator::kLeastSquares);
    case PpsCase::kIII:
      Require(W_pas.cols() == 1, "case iii needs d = 1");
      return PredictedMseCaseIII(W_pas.col(0), W_n.col(0), stats.sigma2, J);
    case PpsCase::kIV:
      return PredictedMseCaseIV(W_pas, W_n, stats, J);
  }
  return 0.0;
}

double PredictedMse(PpsCase c, const Matrix& W_pas, const Matrix& W_n,
                    const PassiveStats& stats) {
  return PredictedMse(c, W_pas, W_n, stats,
                      BuildJ(static_cast<int>(W_pas.rows())));
}

double CaseIObjective(const Matrix& W_pas, const PassiveStats& stats,
                      double epsilon, double lambda, const Matrix& R) {
  const double g = InterpretabilityGapOrthogonal(W_pas, R);
  return -PredictedMseCaseI(W_pas, R, stats) +
         lambda * (g - epsilon) * (g - epsilon);
}

Matrix CaseIGradient(const Matrix& W_pas, const PassiveStats& stats,
                     double epsilon, double lambda, const Matrix& R) {
  CheckStats(W_pas, stats);
  const double d = static_cast<double>(W_pas.cols());
  const Matrix A = BuildJ(static_cast<int>(W_pas.rows())) * W_pas;
  const Matrix P = PseudoInverse(A) * A;
  const Matrix df =
      (-2.0 * P * stats.K0 + P * R * (stats.M + stats.M.transpose())) / d;
  const double g = InterpretabilityGapOrthogonal(W_pas, R);
  return -df - lambda * 4.0 * (g - epsilon) / Dk(W_pas) * Gram(W_pas);
}

double CaseIIObjective(const Matrix& W_pas, const PassiveStats& stats,
                       double epsilon, double lambda, const Matrix& R) {
  CheckStats(W_pas, stats);
  const double d = static_cast<double>(W_pas.cols());
  const double g = InterpretabilityGapOrthogonal(W_pas, R);
  return 2.0 * (R * stats.K0).trace() / d +
         lambda * (g - epsilon) * (g - epsilon);
}

Matrix CaseIIGradient(const Matrix& W_pas, const PassiveStats& stats,
                      double epsilon, double lambda, const Matrix& R) {
  CheckStats(W_pas, stats);
  const double d = static_cast<double>(W_pas.cols());
  const double g = InterpretabilityGapOrthogonal(W_pas, R);
  return 2.0 * stats.K0 / d -
         lambda * 4.0 * (g - epsilon) / Dk(W_pas) * Gram(W_pas);
}

double CaseILipschitzBound(const Matrix& W_pas, const PassiveStats& stats,
                           double lambda) {
  const double d = static_cast<double>(W_pas.cols());
  const Matrix A = BuildJ(static_cast<int>(W_pas.rows())) * W_pas;
  const Matrix P = PseudoInverse(A) * A;
  auto spectral = [](const Matrix& m) {
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
  };
  return spectral(P) * spectral(stats.M + stats.M.transpose()) / d +
         CaseIILipschitzBound(W_pas, lambda);
}

double CaseIILipschitzBound(const Matrix& W_pas, double lambda) {
  const double dk = Dk(W_pas);
  return lambda * 8.0 * Gram(W_pas).squaredNorm() / (dk * dk);
}

double DegenerateEpsilon(const Matrix& W_pas) {
  const RowVector mean = W_pas.colwise().mean();
  return (W_pas.rowwise() - mean).squaredNorm() / Dk(W_pas);
}

PpsOutcome PpsCaseI(const Matrix& W_pas, const PassiveStats& stats,
                    double epsilon, const PenaltySchedule& schedule) {
  CheckStats(W_pas, stats);
  Require(PpsCaseApplies(PpsCase::kI, W_pas.cols(), W_pas.rows()),
          "case i needs d >= k");
  Require(epsilon >= 0, "epsilon must be nonnegative");
  if (epsilon == 0.0) return Undistorted(PpsCase::kI, W_pas, stats);
  return SolveOrthogonal(
      PpsCase::kI, W_pas, epsilon, schedule,
      [&](double lambda, const Matrix& R) {
        return CaseIObjective(W_pas, stats, epsilon, lambda, R);
      },
      [&](double lambda, const Matrix& R) {
        return CaseIGradient(W_pas, stats, epsilon, lambda, R);
      },
      [&](const Matrix& R) { return PredictedMseCaseI(W_pas, R, stats); });
}

PpsOutcome PpsCaseII(const Matrix& W_pas, const PassiveStats& stats,
                     double epsilon, const PenaltySchedule& schedule) {
  CheckStats(W_pas, stats);
  Require(PpsCaseApplies(PpsCase::kII, W_pas.cols(), W_pas.rows()),
          "case ii needs 1 < d < k");
  Require(epsilon >= 0, "epsilon must be nonnegative");
  if (epsilon == 0.0) return Undistorted(PpsCase::kII, W_pas, stats);
  return SolveOrthogonal(
      PpsCase::kII, W_pas, epsilon, schedule,
      [&](double lambda, const Matrix& R) {
        return CaseIIObjective(W_pas, stats, epsilon, lambda, R);
      },
      [&](double lambda, const Matrix& R) {
        return CaseIIGradient(W_pas, stats, epsilon, lambda, R);
      },
      [&](const Matrix& R) { return PredictedMseCaseII(R, stats); });
}

PpsOutcome PpsCaseIIUnconstrained(const Matrix& W_pas,
                                  const PassiveStats& stats,
                                  const PenaltySchedule& schedule) {
  CheckStats(W_pas, stats);
  const Index d = W_pas.cols();
  StiefelProblem p;
  p.objective = [&](const Matrix& R) {
    return CaseIIObjective(W_pas, stats, 0.0, 0.0, R);
  };
  p.euclidean_grad = [&](const Matrix& R) {
    return CaseIIGradient(W_pas, stats, 0.0, 0.0, R);
  };
  p.tolerance = 1e-10;
  p.step_rule = StepRule::kBarzilaiBorwein;
  StiefelResult r =
      MinimizeMultiStart(p, DefaultStarts(d, d, schedule.starts, schedule.seed));
  PpsOutcome out;
  out.pps_case = PpsCase::kII;
  out.R = r.R;
  out.W_n = W_pas * r.R;
  out.g_achieved = InterpretabilityGap(W_pas, out.W_n);
  out.epsilon = out.g_achieved;
  out.mse_predicted = PredictedMseCaseII(r.R, stats);
  out.diagnostics = "lambda=0 iterations=" + std::to_string(r.iterations);
  return out;
}

PpsOutcome PpsCaseIII(const Vector& w_pas, double sigma2, double epsilon,
                      const SphereOptions& options) {
  const Index k = w_pas.size();
  Require(k >= 2, "case iii needs k >= 2");
  Require(epsilon >= 0, "epsilon must be nonnegative");
  Require(sigma2 >= 0, "sigma2 must be nonnegative");
  const Matrix W_pas = w_pas;
  const Matrix J = BuildJ(static_cast<int>(k));
  const Vector A = J * w_pas;
  const double floor = options.floor_ratio * A.squaredNorm();
  PpsOutcome out;
  out.pps_case = PpsCase::kIII;
  out.epsilon = epsilon;
  if (epsilon == 0.0) {
    out.W_n = W_pas;
    out.mse_predicted = PredictedMseCaseIII(w_pas, w_pas, sigma2, J);
    out.diagnostics = "eps=0: no distortion";
    return out;
  }

  ScoreSurfaceSpec surf;
  surf.W_pas = W_pas;
  surf.J = J;
  surf.epsilon = epsilon;
  surf.value = [&](const Matrix& A_n) {
    const double q = A_n.squaredNorm();
    if (q < floor || q == 0.0) return -kInf;
    const double rho = A_n.col(0).dot(A) / q;
    return (1.0 - rho) * (1.0 - rho);
  };
  surf.grad = [&](const Matrix& A_n) {
    const double q = A_n.squaredNorm();
    const double s = A_n.col(0).dot(A);
    const double rho = s / q;
    return Matrix(-2.0 * (1.0 - rho) * (A / q - 2.0 * s * A_n / (q * q)));
  };
  auto best = MaximizeOnScoreSurface(surf, options);
  Require(best.has_value(),
          "every start lies in the rejected region near J w_n = 0");
  out.W_n = best->W_n;
  out.g_achieved = InterpretabilityGap(W_pas, out.W_n);
  out.mse_predicted = PredictedMseCaseIII(w_pas, out.W_n.col(0), sigma2, J);
  out.status = epsilon >= DegenerateEpsilon(W_pas) ? PpsStatus::kUnbounded
                                                   : PpsStatus::kOk;
  std::ostringstream diag;
  diag << "start=" << best->start << " iterations=" << best->iterations;
  out.diagnostics = diag.str();
  return out;
}

PpsOutcome PpsCaseIIIClosedForm(const Vector& w_pas, double sigma2,
                                double epsilon) {
  Require(w_pas.size() == 2, "the closed form needs k = 2");
  Require(epsilon >= 0, "epsilon must be nonnegative");
  const Matrix J = BuildJ(2);
  const double s = std::sqrt(epsilon);
  Vector a(2), b(2);
  a << w_pas(0) - s, w_pas(1) + s;
  b << w_pas(0) + s, w_pas(1) - s;
  const double ma = PredictedMseCaseIII(w_pas, a, sigma2, J);
  const double mb = PredictedMseCaseIII(w_pas, b, sigma2, J);
  PpsOutcome out;
  out.pps_case = PpsCase::kIII;
  out.epsilon = epsilon;
  out.W_n = ma >= mb ? a : b;
  out.mse_predicted = std::max(ma, mb);
  out.g_achieved = InterpretabilityGap(w_pas, out.W_n);
  out.status = epsilon >= DegenerateEpsilon(w_pas) ? PpsStatus::kUnbounded
                                                   : PpsStatus::kOk;
  out.diagnostics = "closed form";
  return out;
}

PpsOutcome PpsCaseIVSphere(const Matrix& W_pas, const PassiveStats& stats,
                           double epsilon, const SphereOptions& options) {
  CheckStats(W_pas, stats);
  Require(PpsCaseApplies(PpsCase::kIV, W_pas.cols(), W_pas.rows()),
          "case iv needs k = 2 and d > 1");
  Require(epsilon >= 0, "epsilon must be nonnegative");
  if (epsilon == 0.0) return Undistorted(PpsCase::kIV, W_pas, stats);
  const Matrix J = BuildJ(2);
  const RowVector A = J * W_pas;
  const double floor = options.floor_ratio * A.squaredNorm();
  const double d = static_cast<double>(W_pas.cols());
  const Matrix MMt = stats.M + stats.M.transpose();
  const double half_term = stats.K_half.trace() / d;

  ScoreSurfaceSpec surf;
  surf.W_pas = W_pas;
  surf.J = J;
  surf.epsilon = epsilon;
  auto numerator = [&](const RowVector& A_n) {
    return (A * stats.K0 * A.transpose())(0) -
           2.0 * (A * stats.K0 * A_n.transpose())(0) +
           (A_n * stats.M * A_n.transpose())(0);
  };
  surf.value = [&](const Matrix& A_n) {
    const double q = A_n.squaredNorm();
    if (q < floor || q == 0.0) return -kInf;
    return half_term + numerator(A_n) / (d * q);
  };
  surf.grad = [&](const Matrix& A_n) {
    const double q = A_n.squaredNorm();
    const double num = numerator(A_n);
    const RowVector dnum = -2.0 * A * stats.K0 + A_n * MMt;
    return Matrix((dnum / q - 2.0 * num * A_n / (q * q)) / d);
  };
  auto best = MaximizeOnScoreSurface(surf, options);
  Require(best.has_value(),
          "every start lies in the rejected region near J W_n = 0");
  PpsOutcome out;
  out.pps_case = PpsCase::kIV;
  out.epsilon = epsilon;
  out.W_n = best->W_n;
  out.g_achieved = InterpretabilityGap(W_pas, out.W_n);
  out.mse_predicted = PredictedMseCaseIV(W_pas, out.W_n, stats, J);
  out.status = epsilon >= DegenerateEpsilon(W_pas) ? PpsStatus::kUnbounded
                                                   : PpsStatus::kOk;
  std::ostringstream diag;
  diag << "sphere start=" << best->start << " iterations=" << best->iterations;
  out.diagnostics = diag.str();
  return out;
}

std::optional<Matrix> CaseIVStationaryPoint(const Matrix& W_pas,
                                            const PassiveStats& stats,
                                            double lambda, double lambda1) {
  CheckStats(W_pas, stats);
  const Index d = W_pas.cols();
  const Matrix J = BuildJ(2);
  const Matrix JtJ = J.transpose() * J;
  const Matrix A = J * W_pas;
  const Matrix left = stats.M + stats.M.transpose() -
                      2.0 * lambda1 * Matrix::Identity(d, d);
  Matrix K(2 * d, 2 * d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) {
      K.block(2 * i, 2 * j, 2, 2) = left(j, i) * JtJ;
    }
  }
  K -= lambda * Matrix::Identity(2 * d, 2 * d);
  const Matrix rhs = 2.0 * J.transpose() * A * stats.K0 - lambda * W_pas;
  Eigen::FullPivLU<Matrix> lu(K);
  lu.setThreshold(1e-12);
  if (!lu.isInvertible()) return std::nullopt;
  const Vector v = lu.solve(Vec(rhs));
  if (!v.allFinite()) return std::nullopt;
  return Unvec(v, 2, d);
}

PpsOutcome PpsCaseIVLookup(const Matrix& W_pas, const PassiveStats& stats,
                           double epsilon, const LookupOptions& lookup,
                           double floor_ratio) {
  CheckStats(W_pas, stats);
  Require(PpsCaseApplies(PpsCase::kIV, W_pas.cols(), W_pas.rows()),
          "case iv needs k = 2 and d > 1");
  Require(epsilon >= 0, "epsilon must be nonnegative");
  if (epsilon == 0.0) return Undistorted(PpsCase::kIV, W_pas, stats);
  const Matrix J = BuildJ(2);
  const double floor = floor_ratio * (J * W_pas).squaredNorm();

  std::vector<double> l1_grid = lookup.lambda1_grid;
  if (l1_grid.empty()) {
    l1_grid.push_back(0.0);
    for (int e = -3; e <= 1; ++e) {
      l1_grid.push_back(std::pow(10.0, e));
      l1_grid.push_back(-std::pow(10.0, e));
    }
  }
  std::vector<double> l_grid = lookup.lambda_grid;
  if (l_grid.empty()) {
    for (int i = 0; i <= 80; ++i) {
      const double v = std::pow(10.0, -4.0 + 0.1 * i);
      l_grid.push_back(v);
      l_grid.push_back(-v);
    }
  }
  std::sort(l_grid.begin(), l_grid.end());

  std::optional<PpsOutcome> best;
  int cells = 0, singular = 0, roots = 0;
  auto consider = [&](const Matrix& W_n, double lambda, double lambda1) {
    const double g = InterpretabilityGap(W_pas, W_n);
    if (RelativeGap(g, epsilon) > 1e-2) return;
    if ((J * W_n).squaredNorm() < floor) return;
    const double mse = PredictedMseCaseIV(W_pas, W_n, stats, J);
    if (!std::isfinite(mse)) return;
    ++roots;
    if (!best || mse > best->mse_predicted) {
      PpsOutcome o;
      o.pps_case = PpsCase::kIV;
      o.epsilon = epsilon;
      o.W_n = W_n;
      o.g_achieved = g;
      o.mse_predicted = mse;
      std::ostringstream diag;
      diag << "lookup lambda=" << lambda << " lambda1=" << lambda1;
      o.diagnostics = diag.str();
      best = std::move(o);
    }
  };

  for (double l1 : l1_grid) {
    bool have_prev = false;
    double prev_l = 0.0, prev_h = 0.0;
    for (double l : l_grid) {
      ++cells;
      auto W = CaseIVStationaryPoint(W_pas, stats, l, l1);
      if (!W) {
        ++singular;
        have_prev = false;
        continue;
      }
      const double h = InterpretabilityGap(W_pas, *W) - epsilon;
      consider(*W, l, l1);
      if (have_prev && (prev_l < 0) == (l < 0) && (prev_h < 0) != (h < 0)) {
        double lo = prev_l, hi = l, h_lo = prev_h;
        Matrix W_mid = *W;
        double mid = hi;
        bool ok = true;
        for (int it = 0; it < lookup.bisection_steps; ++it) {
          mid = 0.5 * (lo + hi);
          auto Wm = CaseIVStationaryPoint(W_pas, stats, mid, l1);
          if (!Wm) {
            ok = false;
            break;
          }
          W_mid = *Wm;
          const double hm = InterpretabilityGap(W_pas, W_mid) - epsilon;
          if ((hm < 0) == (h_lo < 0)) {
            lo = mid;
            h_lo = hm;
          } else {
            hi = mid;
          }
        }
        if (ok) consider(W_mid, mid, l1);
      }
      have_prev = true;
      prev_l = l;
      prev_h = h;
    }
  }

  PpsOutcome out;
  if (best) {
    out = *best;
  } else {
    out.pps_case = PpsCase::kIV;
    out.epsilon = epsilon;
    out.W_n = W_pas;
    out.g_achieved = 0.0;
    out.mse_predicted = PredictedMseCaseIV(W_pas, W_pas, stats, J);
    out.status = PpsStatus::kConstraintUnmet;
  }
  if (out.status == PpsStatus::kOk && epsilon >= DegenerateEpsilon(W_pas)) {
    out.status = PpsStatus::kUnbounded;
  }
  std::ostringstream diag;
  diag << out.diagnostics << (out.diagnostics.empty() ? "" : " ")
       << "cells=" << cells << " singular=" << singular
       << " admissible=" << roots;
  out.diagnostics = diag.str();
  return out;
}

PpsOutcome PpsCaseIV(const Matrix& W_pas, const PassiveStats& stats,
                     double epsilon, const SphereOptions& sphere,
                     const LookupOptions& lookup) {
  if (epsilon == 0.0) return Undistorted(PpsCase::kIV, W_pas, stats);
  PpsOutcome a = PpsCaseIVSphere(W_pas, stats, epsilon, sphere);
  PpsOutcome b =
      PpsCaseIVLookup(W_pas, stats, epsilon, lookup, sphere.floor_ratio);
  const bool b_usable = b.status != PpsStatus::kConstraintUnmet;
  if (b_usable && b.mse_predicted > a.mse_predicted) return b;
  return a;
}

PpsOutcome RunPps(PpsCase c, const Matrix& W_pas, const PassiveStats& stats,
                  double epsilon, const PenaltySchedule& schedule) {
  SphereOptions sphere;
  sphere.seed = schedule.seed;
  switch (c) {
    case PpsCase::kI:
      return PpsCaseI(W_pas, stats, epsilon, schedule);
    case PpsCase::kII:
      return PpsCaseII(W_pas, stats, epsilon, schedule);
    case PpsCase::kIII: {
      Require(W_pas.cols() == 1, "case iii needs d = 1");
      return PpsCaseIII(W_pas.col(0), stats.sigma2, epsilon, sphere);
    }
    case PpsCase::kIV:
      return PpsCaseIV(W_pas, stats, epsilon, sphere);
  }
  throw InvalidArgument("unknown case");
}

std::vector<PiPoint> PiSweep(PpsCase c, const Matrix& W_pas,
                             const PassiveStats& stats,
                             std::vector<double> epsilon_grid,
                             const PenaltySchedule& schedule) {
  std::sort(epsilon_grid.begin(), epsilon_grid.end());
  std::vector<PiPoint> out;
  for (double eps : epsilon_grid) {
    PpsOutcome o = RunPps(c, W_pas, stats, eps, schedule);
    out.push_back({eps, o.g_achieved, o.mse_predicted, o.status, o.W_n});
  }
  return out;
}

PpsDeployment::PpsDeployment(PartitionedModel truth, Matrix W_n)
    : truth_(std::move(truth)), W_n_(std::move(W_n)) {
  Require(W_n_.rows() == truth_.W_pas.rows() &&
              W_n_.cols() == truth_.W_pas.cols(),
          "W_n must have the shape of W_pas");
  joint_ = Reassemble(truth_);
}

PartitionedModel PpsDeployment::Disclosed() const {
  PartitionedModel out = truth_;
  out.W_pas = W_n_;
  return out;
}

Matrix PpsDeployment::DeliveredScores(const Matrix& features) const {
  return Confidences(joint_, features);
}

double PpsDeployment::Accuracy(const Matrix& features,
                               const Labels& labels) const {
  return vflpi::Accuracy(joint_, features, labels);
}

}  // namespace vflpi
