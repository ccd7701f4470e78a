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
#include <limits>

#include <gtest/gtest.h>

#include "test_util.h"
#include "vflpi/attack.h"
#include "vflpi/model.h"

namespace vflpi {
namespace {

using testing::Gen;
using testing::MaxAbs;

TEST(ConfidenceTest, HandExamples) {
  LRParams zero{Matrix::Zero(3, 2), Vector::Zero(3)};
  const Vector c = Confidence(zero, Vector::Constant(2, 0.7));
  for (Index i = 0; i < 3; ++i) EXPECT_NEAR(c(i), 1.0 / 3.0, 1e-15);

  LRParams biased{Matrix::Zero(2, 1), Vector(2)};
  biased.b << std::log(2.0), 0.0;
  const Vector c2 = Confidence(biased, Vector::Zero(1));
  EXPECT_NEAR(c2(0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(c2(1), 1.0 / 3.0, 1e-15);
}

TEST(ConfidenceTest, SumsToOneAndSurvivesHugeLogits) {
  Gen gen(1);
  for (int trial = 0; trial < 100; ++trial) {
    const int k = gen.Int(2, 9);
    const Vector z = 50.0 * gen.GaussianVector(k);
    const Vector c = Softmax(z);
    EXPECT_NEAR(c.sum(), 1.0, 1e-12);
    EXPECT_GE(c.minCoeff(), 0.0);
  }
  Vector big(2);
  big << 1e4, -1e4;
  const Vector c = Softmax(big);
  EXPECT_TRUE(c.allFinite());
  EXPECT_DOUBLE_EQ(c(0), 1.0);
}

TEST(SoftmaxTest, ShiftInvariance) {
  Gen gen(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Vector z = 3.0 * gen.GaussianVector(gen.Int(2, 8));
    const double shift = 20.0 * gen.Normal();
    EXPECT_LE(MaxAbs(Softmax(z) - Softmax(z.array() + shift)), 1e-12);
  }
}

TEST(LogRatioTest, HandExamples) {
  EXPECT_LE(MaxAbs(LogRatio(Vector::Constant(4, 0.25))), 1e-15);
  Vector c(2);
  c << 0.25, 0.75;
  EXPECT_NEAR(LogRatio(c)(0), std::log(3.0), 1e-15);
}

TEST(LogRatioTest, InvertsSoftmaxThroughJ) {
  Gen gen(3);
  for (int trial = 0; trial < 200; ++trial) {
    const int k = gen.Int(2, 10);
    const Vector z = 4.0 * gen.GaussianVector(k);
    EXPECT_LE(MaxAbs(LogRatio(Softmax(z)) - BuildJ(k) * z), 1e-10);
  }
}

TEST(LogRatioTest, ClampsZeros) {
  Vector c(3);
  c << 0.0, 0.5, 0.5;
  const Vector r = LogRatio(c);
  EXPECT_TRUE(r.allFinite());
  EXPECT_NEAR(r(0), std::log(0.5 / kProbabilityFloor), 1e-9);
}

TEST(CrossEntropyTest, GradientMatchesCentralDifferences) {
  Gen gen(4);
  for (int trial = 0; trial < 10; ++trial) {
    const int k = gen.Int(2, 4);
    const Index d = gen.Int(1, 4), n = gen.Int(5, 20);
    const Matrix X = gen.Box(n, d);
    Labels y(n);
    for (auto& v : y) v = gen.Int(0, k - 1);
    LRParams p{gen.Gaussian(k, d), gen.GaussianVector(k)};
    const LRParams g = CrossEntropyGradient(p, X, y);
    const double h = 1e-6;
    Matrix fd_W(k, d);
    Vector fd_b(k);
    for (Index i = 0; i < p.W.size(); ++i) {
      LRParams a = p, b = p;
      a.W(i) += h;
      b.W(i) -= h;
      fd_W(i) = (CrossEntropy(a, X, y) - CrossEntropy(b, X, y)) / (2 * h);
    }
    for (Index i = 0; i < k; ++i) {
      LRParams a = p, b = p;
      a.b(i) += h;
      b.b(i) -= h;
      fd_b(i) = (CrossEntropy(a, X, y) - CrossEntropy(b, X, y)) / (2 * h);
    }
    const double scale = std::sqrt(g.W.squaredNorm() + g.b.squaredNorm());
    const double err = std::sqrt((fd_W - g.W).squaredNorm() +
                                 (fd_b - g.b).squaredNorm());
    EXPECT_LE(err / scale, 1e-5);
  }
}

TEST(TrainTest, SeparableDataIsFitPerfectly) {
  Gen gen(5);
  Matrix X(200, 2);
  Labels y(200);
  for (Index i = 0; i < 200; ++i) {
    const bool pos = i % 2 == 0;
    X(i, 0) = pos ? gen.Uniform(0.6, 1.0) : gen.Uniform(0.0, 0.4);
    X(i, 1) = gen.Uniform();
    y[i] = pos ? 1 : 0;
  }
  TrainConfig cfg;
  cfg.max_epochs = 500;
  cfg.patience = 50;
  const LRParams p = Train(X, y, 2, cfg);
  EXPECT_DOUBLE_EQ(Accuracy(p, X, y), 1.0);
}

TEST(TrainTest, IndependentLabelsGiveMajorityRate) {
  Gen gen(6);
  const Index n = 4000;
  const Matrix X = gen.Box(n, 3);
  Labels y(n);
  for (auto& v : y) v = gen.Uniform() < 0.7 ? 0 : 1;
  const LRParams p = Train(X.topRows(3000), Labels(y.begin(), y.begin() + 3000),
                           2, TrainConfig{});
  const Labels test(y.begin() + 3000, y.end());
  double majority = 0;
  for (int v : test) majority += v == 0;
  majority /= static_cast<double>(test.size());
  EXPECT_NEAR(Accuracy(p, X.bottomRows(1000), test), majority, 0.05);
}

TEST(TrainTest, DeterministicUnderSeed) {
  Gen gen(7);
  const Matrix X = gen.Box(300, 3);
  Labels y(300);
  for (Index i = 0; i < 300; ++i) y[i] = X(i, 0) + X(i, 1) > 1.0;
  TrainConfig cfg;
  cfg.seed = 42;
  const LRParams a = Train(X, y, 2, cfg), b = Train(X, y, 2, cfg);
  EXPECT_EQ(a.W, b.W);
  EXPECT_EQ(a.b, b.b);
}

TEST(TrainTest, NonFiniteLossRaisesDivergence) {
  Matrix X = Matrix::Constant(20, 2, 0.5);
  X(3, 1) = std::numeric_limits<double>::quiet_NaN();
  Labels y(20);
  for (Index i = 0; i < 20; ++i) y[i] = i % 2;
  EXPECT_THROW(Train(X, y, 2, TrainConfig{}), DivergenceError);
}

TEST(TrainTest, RejectsBadInput) {
  const Matrix X = Matrix::Zero(4, 1);
  EXPECT_THROW(Train(X, {0, 0, 0, 0}, 1, TrainConfig{}), InvalidArgument);
  EXPECT_THROW(Train(X, {0, 1, 2, 0}, 2, TrainConfig{}), InvalidArgument);
}

TEST(AccuracyTest, Examples) {
  Gen gen(8);
  const Matrix X = gen.Box(20, 2);
  Labels y(20);
  for (Index i = 0; i < 20; ++i) y[i] = X(i, 0) > X(i, 1);
  LRParams perfect{Matrix(2, 2), Vector::Zero(2)};
  perfect.W << 0, 1,  //
      1, 0;
  EXPECT_DOUBLE_EQ(Accuracy(perfect, X, y), 1.0);

  // A constant predictor scores the class prior.
  LRParams constant{Matrix::Zero(2, 2), Vector(2)};
  constant.b << 0.0, 1.0;
  double ones = 0;
  for (int v : y) ones += v;
  EXPECT_DOUBLE_EQ(Accuracy(constant, X, y), ones / 20.0);

  // Brute-force count with random parameters.
  LRParams random{gen.Gaussian(2, 2), gen.GaussianVector(2)};
  int hits = 0;
  for (Index i = 0; i < 20; ++i) {
    const Vector z = random.W * X.row(i).transpose() + random.b;
    hits += (z(1) > z(0) ? 1 : 0) == y[i];
  }
  EXPECT_DOUBLE_EQ(Accuracy(random, X, y), hits / 20.0);
}

TEST(PredictTest, TiesGoToLowestIndex) {
  LRParams p{Matrix::Zero(3, 1), Vector::Zero(3)};
  EXPECT_EQ(Predict(p, Vector::Zero(1)), 0);
  p.b << -1, 2, 2;
  EXPECT_EQ(Predict(p, Vector::Zero(1)), 1);
}

TEST(PartitionParamsTest, RoutesColumnsAndRoundTrips) {
  Gen gen(9);
  const LRParams p{gen.Gaussian(3, 19), gen.GaussianVector(3)};
  const Partition wrap = WindowPartition(19, 5, 18);
  const PartitionedModel pm = PartitionParams(p, wrap);
  const std::vector<Index> order = {18, 0, 1, 2, 3};
  for (Index j = 0; j < 5; ++j) {
    EXPECT_EQ(pm.W_pas.col(j), p.W.col(order[j]));
  }
  EXPECT_EQ(pm.W_act.cols(), 14);
  EXPECT_EQ(pm.b, p.b);
  const LRParams back = Reassemble(pm);
  EXPECT_EQ(back.W, p.W);

  const PartitionedModel wide = PartitionParams(p, WindowPartition(19, 18, 3));
  EXPECT_EQ(wide.W_act.cols(), 1);
  EXPECT_EQ(wide.W_act.col(0), p.W.col(2));
}

TEST(ModelJsonTest, RoundTrip) {
  Gen gen(10);
  const LRParams p{gen.Gaussian(3, 4), gen.GaussianVector(3)};
  const std::vector<Index> idx = {4, 7, 1, 0};
  std::vector<Index> back_idx;
  const LRParams back = ModelFromJson(ModelToJson(p, idx), &back_idx);
  EXPECT_EQ(back.W, p.W);
  EXPECT_EQ(back.b, p.b);
  EXPECT_EQ(back_idx, idx);
  EXPECT_THROW(ModelFromJson("{\"k\": 2}"), InvalidArgument);
}

}  // namespace
}  // namespace vflpi
