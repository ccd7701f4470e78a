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

// Parameter distortion by the passive party. W_pas is replaced by W_n before
// it is disclosed, trading attack MSE against the interpretability gap
//   g = (1/(d k)) ||W_pas - W_n||_F^2.
// Four regimes, by (d, k):
//   i   d >= k      W_n = W_pas R, R orthogonal; attacker uses half*.
//   ii  1 < d < k   W_n = W_pas R, R orthogonal; attacker uses least squares.
//   iii d = 1       free w_n on the g = eps sphere; least squares.
//   iv  k = 2, d>1  free W_n on the g = eps sphere; half*.

#ifndef VFLPI_DEFENSE_H_
#define VFLPI_DEFENSE_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vflpi/common.h"
#include "vflpi/model.h"

namespace vflpi {

// Second-order statistics of the passive features.
struct PassiveStats {
  Vector mu;      // E[X]
  Matrix K0;      // E[X X^T]
  Matrix K_half;  // E[(X - 1/2)(X - 1/2)^T]
  Matrix M;       // 1 (mu - 1/4)^T
  double sigma2 = 0.0;  // E[x^2]; only meaningful for d = 1
  Index n = 0;

  Index d() const { return mu.size(); }
};

// Plug-in (1/n) statistics of the rows of `passive_features`.
PassiveStats ComputePassiveStats(const Matrix& passive_features);

enum class PpsCase { kI, kII, kIII, kIV };

const char* PpsCaseName(PpsCase c);  // "i", "ii", "iii", "iv"
PpsCase PpsCaseFromName(const std::string& name);
// Whether a case's preconditions hold for (d, k).
bool PpsCaseApplies(PpsCase c, Index d, int k);

double InterpretabilityGap(const Matrix& W_pas, const Matrix& W_n);
// (2/(d k)) Tr((I - R) W_pas^T W_pas); equals InterpretabilityGap for
// orthogonal R.
double InterpretabilityGapOrthogonal(const Matrix& W_pas, const Matrix& R);

enum class PpsStatus {
  kOk,
  // The penalty schedule ended without reaching |g - eps| <= 1e-2 eps.
  kConstraintUnmet,
  // The eps-sphere reaches W_n with J W_n = 0, where the attack MSE has no
  // upper bound; the returned point sits on the rejection floor.
  kUnbounded,
};

const char* PpsStatusName(PpsStatus s);

struct PpsOutcome {
  Matrix W_n;
  std::optional<Matrix> R;  // cases i and ii
  double g_achieved = 0.0;
  double mse_predicted = 0.0;
  double epsilon = 0.0;
  PpsCase pps_case = PpsCase::kI;
  PpsStatus status = PpsStatus::kOk;
  // Free-form solver notes (iterations, winning lambda, start index...).
  std::string diagnostics;
};

struct PenaltySchedule {
  double lambda_min = 1.0;
  double lambda_max = 1e8;
  double factor = 10.0;
  int starts = 5;
  // Continuation is entered at this many penalties spaced geometrically in
  // [lambda_min, lambda_max), from every start.
  int entry_levels = 4;
  std::uint64_t seed = 0;
  // Success threshold on |g - eps| / eps.
  double relative_tolerance = 1e-2;
  // Continuation stops early once |g - eps| / eps is below this.
  double target_tolerance = 1e-4;
};

// Analytic attack MSE at W_n = W_pas R.
// Case i:  (1/d) Tr K_half + (1/d) Tr(P (K0 - 2 K0 R^T + R M R^T)), P = A+A.
double PredictedMseCaseI(const Matrix& W_pas, const Matrix& R,
                         const PassiveStats& stats);
// Case ii: (2/d) Tr(K0 - R K0).
double PredictedMseCaseII(const Matrix& R, const PassiveStats& stats);
// Case iii: sigma2 (1 - A_n^T A / A_n^T A_n)^2 with A = J w_pas, A_n = J w_n.
double PredictedMseCaseIII(const Vector& w_pas, const Vector& w_n,
                           double sigma2, const Matrix& J);
// Case iv: (1/d) Tr K_half
//   + (A K0 A^T - 2 A K0 A_n^T + A_n M A_n^T) / (d ||A_n||^2).
double PredictedMseCaseIV(const Matrix& W_pas, const Matrix& W_n,
                          const PassiveStats& stats, const Matrix& J);

enum class Estimator { kLeastSquares, kHalfStar };

// Expected unclipped attack MSE when scores come from W_pas but the attacker
// solves with W_n, for any W_n. Works from first principles (no case
// algebra) and so cross-checks the case formulas.
double DistortedAttackMse(const Matrix& J, const Matrix& W_pas,
                          const Matrix& W_n, const PassiveStats& stats,
                          Estimator estimator);

// Case-dispatched analytic MSE using the given J.
double PredictedMse(PpsCase c, const Matrix& W_pas, const Matrix& W_n,
                    const PassiveStats& stats, const Matrix& J);
double PredictedMse(PpsCase c, const Matrix& W_pas, const Matrix& W_n,
                    const PassiveStats& stats);

// Penalized objectives of cases i and ii with their Euclidean gradients,
// exposed for checking.
double CaseIObjective(const Matrix& W_pas, const PassiveStats& stats,
                      double epsilon, double lambda, const Matrix& R);
Matrix CaseIGradient(const Matrix& W_pas, const PassiveStats& stats,
                     double epsilon, double lambda, const Matrix& R);
double CaseIIObjective(const Matrix& W_pas, const PassiveStats& stats,
                       double epsilon, double lambda, const Matrix& R);
Matrix CaseIIGradient(const Matrix& W_pas, const PassiveStats& stats,
                      double epsilon, double lambda, const Matrix& R);

// Upper bound on the Frobenius Lipschitz constant of the case-i gradient:
//   (1/d) ||P||_2 ||M + M^T||_2 + lambda 8 ||W||_F^2 / (d k)^2,
// with W = W_pas^T W_pas.
double CaseILipschitzBound(const Matrix& W_pas, const PassiveStats& stats,
                           double lambda);
// lambda 8 ||W||_F^2 / (d k)^2 (the case-ii MSE term is linear).
double CaseIILipschitzBound(const Matrix& W_pas, double lambda);

// Distance eps at which the g = eps sphere first touches {W : J W = 0}.
// Cases iii and iv have unbounded MSE for eps at or beyond this value.
double DegenerateEpsilon(const Matrix& W_pas);

PpsOutcome PpsCaseI(const Matrix& W_pas, const PassiveStats& stats,
                    double epsilon, const PenaltySchedule& schedule = {});
PpsOutcome PpsCaseII(const Matrix& W_pas, const PassiveStats& stats,
                     double epsilon, const PenaltySchedule& schedule = {});
// Unconstrained case ii (lambda = 0): R = -I.
PpsOutcome PpsCaseIIUnconstrained(const Matrix& W_pas,
                                  const PassiveStats& stats,
                                  const PenaltySchedule& schedule = {});

struct SphereOptions {
  int random_starts = 6;
  std::uint64_t seed = 0;
  // Iterates with ||A_n||^2 below floor_ratio * ||A||^2 are rejected.
  double floor_ratio = 1e-3;
};

// Case iii by descent on the eps-sphere around w_pas (length k).
PpsOutcome PpsCaseIII(const Vector& w_pas, double sigma2, double epsilon,
                      const SphereOptions& options = {});
// The two k = 2 candidates w_pas -/+ sqrt(eps) (1, -1), best first.
PpsOutcome PpsCaseIIIClosedForm(const Vector& w_pas, double sigma2,
                                double epsilon);

struct LookupOptions {
  std::vector<double> lambda1_grid;  // empty: built-in grid
  std::vector<double> lambda_grid;   // empty: built-in signed log grid
  int bisection_steps = 60;
};

// Case iv: the better of the eps-sphere descent and the stationary-point
// lookup table.
PpsOutcome PpsCaseIV(const Matrix& W_pas, const PassiveStats& stats,
                     double epsilon, const SphereOptions& sphere = {},
                     const LookupOptions& lookup = {});
PpsOutcome PpsCaseIVSphere(const Matrix& W_pas, const PassiveStats& stats,
                           double epsilon, const SphereOptions& sphere = {});
// Solves ((M + M^T - 2 l1 I) (x) J^T J - l I) vec(W_n)
//   = vec(2 J^T A K0 - l W_pas)
// over the (l, l1) grid, refines sign changes of g - eps by bisection in l
// and keeps the admissible point with the largest predicted MSE.
PpsOutcome PpsCaseIVLookup(const Matrix& W_pas, const PassiveStats& stats,
                           double epsilon, const LookupOptions& lookup = {},
                           double floor_ratio = 1e-3);
// One cell of the lookup; nullopt when the system is singular.
std::optional<Matrix> CaseIVStationaryPoint(const Matrix& W_pas,
                                            const PassiveStats& stats,
                                            double lambda, double lambda1);

// Dispatch by case. Options other than the schedule use defaults.
PpsOutcome RunPps(PpsCase c, const Matrix& W_pas, const PassiveStats& stats,
                  double epsilon, const PenaltySchedule& schedule = {});

struct PiPoint {
  double epsilon = 0.0;
  double g_achieved = 0.0;
  double mse_predicted = 0.0;
  PpsStatus status = PpsStatus::kOk;
  Matrix W_n;
};

// One solver run per eps; rows sorted by eps.
std::vector<PiPoint> PiSweep(PpsCase c, const Matrix& W_pas,
                             const PassiveStats& stats,
                             std::vector<double> epsilon_grid,
                             const PenaltySchedule& schedule = {});

// The model as deployed under a distortion: scores always come from the true
// parameters, the active party only ever sees W_n.
class PpsDeployment {
 public:
  PpsDeployment(PartitionedModel truth, Matrix W_n);

  // What the active party is told.
  PartitionedModel Disclosed() const;
  // Confidence vectors delivered for rows of the full feature matrix.
  Matrix DeliveredScores(const Matrix& features) const;
  double Accuracy(const Matrix& features, const Labels& labels) const;

 private:
  PartitionedModel truth_;
  LRParams joint_;
  Matrix W_n_;
};

}  // namespace vflpi

#endif  // VFLPI_DEFENSE_H_
