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

#include <cmath>

#include <gtest/gtest.h>

#include "test_util.h"
#include "vflpi/attack.h"

namespace vflpi {
namespace {

using testing::Gen;
using testing::MaxAbs;

// A random joint model, a window, and exact log-ratios for n box samples.
struct Scenario {
  LRParams vfl;
  PartitionedModel pm;
  Matrix X;        // n x d_t
  Matrix c_prime;  // n x (k-1)
};

Scenario MakeScenario(Gen& gen, int k, Index d_t, Index d, Index n) {
  Scenario s;
  s.vfl = {2.0 * gen.Gaussian(k, d_t), gen.GaussianVector(k)};
  s.pm = PartitionParams(s.vfl, WindowPartition(d_t, d, gen.Int(0, d_t - 1)));
  s.X = gen.Box(n, d_t);
  s.c_prime.resize(n, k - 1);
  for (Index i = 0; i < n; ++i) {
    s.c_prime.row(i) =
        LogRatio(Confidence(s.vfl, s.X.row(i).transpose())).transpose();
  }
  return s;
}

Vector Active(const Scenario& s, Index i) {
  return SelectCols(s.X.row(i), s.pm.partition.active).transpose();
}
Vector Passive(const Scenario& s, Index i) {
  return SelectCols(s.X.row(i), s.pm.partition.passive).transpose();
}

TEST(BuildJTest, Layout) {
  Matrix j2(1, 2);
  j2 << -1, 1;
  EXPECT_EQ(BuildJ(2), j2);
  Matrix j3(2, 3);
  j3 << -1, 1, 0,  //
      0, -1, 1;
  EXPECT_EQ(BuildJ(3), j3);
  for (int k = 2; k <= 10; ++k) {
    EXPECT_EQ(MaxAbs(BuildJ(k) * Vector::Ones(k)), 0.0);
  }
  EXPECT_THROW(BuildJ(1), InvalidArgument);
}

TEST(FormSystemTest, ExactScoresSatisfyTheSystem) {
  Gen gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = gen.Int(2, 6);
    const Index d_t = gen.Int(3, 9);
    const Scenario s = MakeScenario(gen, k, d_t, gen.Int(1, d_t - 1), 10);
    for (Index i = 0; i < 10; ++i) {
      const AttackSystem sys =
          FormSystem(s.pm, Active(s, i), s.c_prime.row(i).transpose());
      EXPECT_LE((sys.A * Passive(s, i) - sys.b_prime).norm(), 1e-8);
    }
  }
}

TEST(FormSystemTest, ZeroActivePartPassesScoresThrough) {
  Gen gen(2);
  const Matrix J = BuildJ(4);
  const Vector c = gen.GaussianVector(3);
  const AttackSystem sys = FormSystem(J, gen.Gaussian(4, 2), Matrix::Zero(4, 3),
                                      Vector::Zero(4), gen.GaussianVector(3), c);
  EXPECT_EQ(sys.b_prime, c);
}

TEST(FormSystemTest, EstimatedScoresShiftRightHandSide) {
  Gen gen(3);
  const Scenario s = MakeScenario(gen, 4, 6, 2, 1);
  const Vector c = s.c_prime.row(0).transpose();
  const Vector gap = gen.GaussianVector(3);
  const AttackSystem a = FormSystem(s.pm, Active(s, 0), c);
  const AttackSystem b = FormSystem(s.pm, Active(s, 0), c + gap);
  EXPECT_LE(MaxAbs(b.b_prime - a.b_prime - gap), 1e-12);
  EXPECT_EQ(a.A, b.A);
}

TEST(LeastSquaresTest, ExactScoresReconstructExactly) {
  Gen gen(4);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = gen.Int(3, 8);
    const Index d = gen.Int(1, k - 1);
    const Scenario s = MakeScenario(gen, k, d + gen.Int(1, 5), d, 5);
    for (Index i = 0; i < 5; ++i) {
      const AttackSystem sys =
          FormSystem(s.pm, Active(s, i), s.c_prime.row(i).transpose());
      EXPECT_LE(MaxAbs(LeastSquaresEstimate(sys) - Passive(s, i)), 1e-6);
    }
  }
}

TEST(LeastSquaresTest, AnyDEquationsSuffice) {
  // With exact scores, any d of the k-1 equations pin x down.
  Gen gen(5);
  const int k = 7;
  const Index d = 3;
  const Scenario s = MakeScenario(gen, k, 8, d, 3);
  for (Index i = 0; i < 3; ++i) {
    const AttackSystem sys =
        FormSystem(s.pm, Active(s, i), s.c_prime.row(i).transpose());
    for (int pick = 0; pick < 10; ++pick) {
      std::vector<Index> rows = {0, 1, 2, 3, 4, 5};
      std::shuffle(rows.begin(), rows.end(), gen.engine());
      rows.resize(d);
      const AttackSystem sub{SelectRows(sys.A, rows),
                             SelectRows(sys.b_prime, rows).col(0)};
      EXPECT_LE(MaxAbs(LeastSquaresEstimate(sub) - Passive(s, i)), 1e-6);
    }
  }
}

TEST(LeastSquaresTest, IdentitySystem) {
  Gen gen(6);
  const Vector b = gen.GaussianVector(3);
  EXPECT_LE(MaxAbs(LeastSquaresEstimate({Matrix::Identity(3, 3), b}) - b),
            1e-14);
}

TEST(LeastSquaresTest, GapIdentity) {
  Gen gen(7);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = gen.Int(3, 6);
    const Index d = gen.Int(1, k - 1);
    const Scenario s = MakeScenario(gen, k, d + 3, d, 1);
    const Vector c = s.c_prime.row(0).transpose();
    const Vector gap = gen.GaussianVector(k - 1);
    const AttackSystem sys = FormSystem(s.pm, Active(s, 0), c + gap);
    const Matrix& A = sys.A;
    const Vector oracle =
        -(A.transpose() * A).inverse() * A.transpose() * gap;
    EXPECT_LE(MaxAbs(Passive(s, 0) - LeastSquaresEstimate(sys) - oracle),
              1e-8);
  }
}

TEST(LeastSquaresTest, RankDeficiencyCarriesTheRank) {
  Matrix A(3, 2);
  A << 1, 2,  //
      2, 4,   //
      3, 6;
  try {
    LeastSquaresSolver solver(A);
    FAIL() << "expected RankDeficientError";
  } catch (const RankDeficientError& e) {
    EXPECT_EQ(e.rank(), 1);
    EXPECT_EQ(e.required(), 2);
  }
  // d >= k (more unknowns than equations) is rejected outright.
  EXPECT_THROW(LeastSquaresSolver(Matrix::Ones(1, 2)), InvalidArgument);
}

TEST(HalfStarTest, HandPseudoinverse) {
  Matrix A(1, 2);
  A << 1, 1;
  Vector b(1);
  b << 1.0;  // x_true = (0.3, 0.7)
  const Vector x = HalfStarEstimate({A, b});
  EXPECT_NEAR(x(0), 0.5, 1e-15);
  EXPECT_NEAR(x(1), 0.5, 1e-15);
  EXPECT_LE(MaxAbs(PseudoInverse(A) - Vector::Constant(2, 0.5)), 1e-15);
}

TEST(HalfStarTest, ZeroMatrixGivesBoxCentre) {
  const Vector x =
      HalfStarEstimate({Matrix::Zero(2, 4), Vector::Constant(2, 3.0)});
  EXPECT_LE(MaxAbs(x - Vector::Constant(4, 0.5)), 0.0);
}

TEST(HalfStarTest, AgnosticShiftIsPinvOfGap) {
  Gen gen(8);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = gen.Int(2, 5);
    const Index d = gen.Int(k, k + 4);
    const Scenario s = MakeScenario(gen, k, d + 2, d, 1);
    const Vector c = s.c_prime.row(0).transpose();
    const Vector gap = gen.GaussianVector(k - 1);
    const AttackSystem exact = FormSystem(s.pm, Active(s, 0), c);
    const AttackSystem agn = FormSystem(s.pm, Active(s, 0), c + gap);
    EXPECT_LE(MaxAbs(HalfStarEstimate(agn) - HalfStarEstimate(exact) -
                     PseudoInverse(exact.A) * gap),
              1e-8);
  }
}

TEST(HalfStarTest, ClosestSolutionToCentre) {
  Gen gen(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Index rows = gen.Int(1, 3), d = rows + gen.Int(1, 4);
    const Matrix A = gen.Gaussian(rows, d);
    const Vector b = gen.GaussianVector(rows);
    const Vector best = HalfStarEstimate({A, b});
    const Matrix pinv = PseudoInverse(A);
    const Matrix null_proj = Matrix::Identity(d, d) - pinv * A;
    const double best_dist = (best - Vector::Constant(d, 0.5)).norm();
    for (int i = 0; i < 100; ++i) {
      const Vector x = pinv * b + null_proj * (3.0 * gen.GaussianVector(d));
      EXPECT_GE((x - Vector::Constant(d, 0.5)).norm(), best_dist - 1e-9);
    }
  }
}

TEST(PseudoInverseTest, RankAndPenroseConditions) {
  Gen gen(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Index r = gen.Int(1, 3);
    const Matrix A = gen.Gaussian(4, r) * gen.Gaussian(r, 5);
    const Matrix P = PseudoInverse(A);
    EXPECT_EQ(NumericalRank(A), r);
    EXPECT_LE(MaxAbs(A * P * A - A), 1e-9);
    EXPECT_LE(MaxAbs(P * A * P - P), 1e-9);
    EXPECT_LE(MaxAbs((A * P).transpose() - A * P), 1e-9);
    EXPECT_LE(MaxAbs((P * A).transpose() - P * A), 1e-9);
  }
}

TEST(ClipToBoxTest, Examples) {
  Vector x(3);
  x << 1.2, -0.1, 0.5;
  Vector want(3);
  want << 1.0, 0.0, 0.5;
  EXPECT_EQ(ClipToBox(x), want);
  EXPECT_EQ(ClipToBox(want), want);
}

TEST(ClipToBoxTest, NeverIncreasesError) {
  Gen gen(11);
  for (int trial = 0; trial < 500; ++trial) {
    const Index d = gen.Int(1, 6);
    const Vector truth = gen.Box(d, 1).col(0);
    const Vector est = 2.0 * gen.GaussianVector(d);
    EXPECT_LE((ClipToBox(est) - truth).squaredNorm(),
              (est - truth).squaredNorm() + 1e-15);
  }
}

TEST(EmpiricalMseTest, Examples) {
  Gen gen(12);
  const Matrix X = gen.Box(10000, 3);
  EXPECT_EQ(EmpiricalMse(X, X), 0.0);
  EXPECT_NEAR(EmpiricalMse(X, Matrix::Constant(10000, 3, 0.5)), 1.0 / 12.0,
              0.01);
  Matrix a(1, 2), b(1, 2);
  a << 0, 0;
  b << 1, 2;
  EXPECT_DOUBLE_EQ(EmpiricalMse(a, b), 2.5);
}

// Plug-in check of both analytic formulas against the unclipped empirical
// MSE of the same samples.
TEST(AnalyticMseTest, PlugInStatisticsAreExact) {
  Gen gen(13);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = gen.Int(2, 6);
    const Index d = gen.Int(1, k + 3);
    const Index n = 1000;
    const Scenario s = MakeScenario(gen, k, d + 2, d, n);
    const Matrix noise = 0.3 * gen.Gaussian(n, k - 1);
    const Matrix c_hat = s.c_prime + noise;
    const ScoreGapStats gaps = GapStats(s.c_prime, c_hat);

    Matrix truth(n, d), est(n, d);
    Matrix K_half = Matrix::Zero(d, d);
    Matrix A;
    for (Index i = 0; i < n; ++i) {
      const AttackSystem sys =
          FormSystem(s.pm, Active(s, i), c_hat.row(i).transpose());
      A = sys.A;
      truth.row(i) = Passive(s, i).transpose();
      est.row(i) = (d < k ? LeastSquaresEstimate(sys) : HalfStarEstimate(sys))
                       .transpose();
      const Vector centred = Passive(s, i) - Vector::Constant(d, 0.5);
      K_half += centred * centred.transpose();
    }
    K_half /= static_cast<double>(n);
    const double empirical = EmpiricalMse(truth, est);
    const double analytic = d < k ? AnalyticMseLs(A, gaps.K_cc)
                                  : AnalyticMseHalfStar(A, K_half, gaps.K_cc);
    EXPECT_NEAR(analytic, empirical, 1e-8) << "k=" << k << " d=" << d;
  }
}

TEST(AnalyticMseTest, ExactScoreAndSignProperties) {
  Gen gen(14);
  for (int trial = 0; trial < 30; ++trial) {
    const int k = gen.Int(3, 6);
    const Index d_ls = gen.Int(1, k - 1), d_hs = gen.Int(k, k + 3);
    const Matrix A_ls = gen.Gaussian(k - 1, d_ls);
    const Matrix A_hs = gen.Gaussian(k - 1, d_hs);
    const Matrix zero = Matrix::Zero(k - 1, k - 1);
    EXPECT_EQ(AnalyticMseLs(A_ls, zero), 0.0);
    const Matrix G = gen.Gaussian(k - 1, k - 1);
    const Matrix psd = G * G.transpose();
    EXPECT_GE(AnalyticMseLs(A_ls, psd), 0.0);

    const Matrix H = gen.Gaussian(d_hs, d_hs);
    const Matrix K_half = H * H.transpose();
    const Matrix P = PseudoInverse(A_hs) * A_hs;
    const double first =
        ((Matrix::Identity(d_hs, d_hs) - P) * K_half).trace() / d_hs;
    EXPECT_NEAR(AnalyticMseHalfStar(A_hs, K_half, zero), first, 1e-10);
    EXPECT_GE(AnalyticMseHalfStar(A_hs, K_half, psd), first - 1e-12);
  }
}

TEST(GapStatsTest, Examples) {
  Gen gen(15);
  const Matrix c = gen.Gaussian(7, 3);
  const ScoreGapStats same = GapStats(c, c);
  EXPECT_EQ(MaxAbs(same.K_cc), 0.0);
  EXPECT_EQ(same.count, 7);

  const Vector g = gen.GaussianVector(3);
  const ScoreGapStats one = GapStats(c.topRows(1), c.topRows(1) + g.transpose());
  EXPECT_LE(MaxAbs(one.K_cc - g * g.transpose()), 1e-12);

  const ScoreGapStats many = GapStats(c, c + gen.Gaussian(7, 3));
  EXPECT_LE(MaxAbs(many.K_cc - many.K_cc.transpose()), 1e-15);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(many.K_cc);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
  EXPECT_THROW(GapStats(Matrix(0, 3), Matrix(0, 3)), InvalidArgument);
}

// Replacing J by T J for invertible T.
TEST(TInvarianceTest, ProjectorAndEstimates) {
  Gen gen(16);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = gen.Int(2, 6);
    const Index d_t = 9;
    const Index d = gen.Int(1, 7);
    const Scenario s = MakeScenario(gen, k, d_t, d, 1);
    const Matrix J = BuildJ(k);
    const Matrix TJ = gen.Invertible(k - 1) * J;
    const Vector y = Active(s, 0);
    const Vector c = s.c_prime.row(0).transpose();
    const Vector c_tj = TJ * (s.vfl.W * s.X.row(0).transpose() + s.vfl.b);
    const AttackSystem a =
        FormSystem(J, s.pm.W_pas, s.pm.W_act, s.pm.b, y, c);
    const AttackSystem b =
        FormSystem(TJ, s.pm.W_pas, s.pm.W_act, s.pm.b, y, c_tj);
    EXPECT_LE(MaxAbs(PseudoInverse(a.A) * a.A - PseudoInverse(b.A) * b.A),
              1e-8);
    if (d < k) {
      EXPECT_LE(MaxAbs(LeastSquaresEstimate(a) - LeastSquaresEstimate(b)),
                1e-6);
    } else {
      EXPECT_LE(MaxAbs(HalfStarEstimate(a) - HalfStarEstimate(b)), 1e-6);
    }
  }
}

TEST(AttackCsvTest, RowFormat) {
  EXPECT_EQ(AttackCsvHeader(), "dataset,window_start,d,method,n_p,alpha,beta,mse");
  EXPECT_EQ(AttackCsvRow({"bank", 3, 5, "ram", 100, 1.0, 0.0, 0.125}),
            "bank,3,5,ram,100,1,0,0.125");
}

}  // namespace
}  // namespace vflpi
