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

#include "vflpi/model.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "json_util.h"
#include "softmax_fit.h"

namespace vflpi {
namespace {

LRParams ZeroLike(int k, Index d) {
  return {Matrix::Zero(k, d), Vector::Zero(k)};
}

double LogSumExp(const Vector& z) {
  const double m = z.maxCoeff();
  return m + std::log((z.array() - m).exp().sum());
}

void CheckShapes(const LRParams& params, const Matrix& features,
                 const Labels& labels) {
  Require(params.W.cols() == features.cols(),
          "feature count does not match the model");
  Require(params.b.size() == params.W.rows(), "bias length must equal k");
  Require(static_cast<Index>(labels.size()) == features.rows(),
          "one label per row required");
}

}  // namespace

namespace internal {

double SoftmaxObjective(const LRParams& params, const Matrix& features,
                        const Labels& labels, const std::vector<Index>& rows,
                        double ce_weight, const ObservedTerms* obs,
                        double obs_ce_weight, double obs_s_weight,
                        LRParams* grad) {
  const int k = params.k();
  double total = 0.0;
  Vector z(k), g(k);

  auto accumulate = [&](const auto& x, const Vector& dz) {
    grad->W.noalias() += dz * x;
    grad->b += dz;
  };

  if (ce_weight != 0.0) {
    for (Index r : rows) {
      auto x = features.row(r);
      z = params.W * x.transpose() + params.b;
      const double lse = LogSumExp(z);
      const int y = labels[r];
      total += ce_weight * (lse - z(y));
      if (grad) {
        g = (z.array() - lse).exp();
        g(y) -= 1.0;
        accumulate(x, ce_weight * g);
      }
    }
  }

  if (obs != nullptr && obs->count() > 0) {
    const bool use_labels = obs_ce_weight != 0.0 && !obs->labels.empty();
    const bool use_scores = obs_s_weight != 0.0 && obs->scores.rows() > 0;
    for (Index p = 0; p < obs->count(); ++p) {
      if (!use_labels && !use_scores) break;
      auto x = obs->features.row(p);
      z = params.W * x.transpose() + params.b;
      const double lse = LogSumExp(z);
      Vector log_f = z.array() - lse;
      Vector dz = Vector::Zero(k);
      if (use_labels) {
        const int y = obs->labels[p];
        total += obs_ce_weight * (-log_f(y));
        if (grad) {
          Vector e = log_f.array().exp();
          e(y) -= 1.0;
          dz += obs_ce_weight * e;
        }
      }
      if (use_scores) {
        Vector log_c = obs->scores.row(p)
                           .transpose()
                           .cwiseMax(kProbabilityFloor)
                           .cwiseMin(1.0)
                           .array()
                           .log();
        Vector r = log_f - log_c;
        total += obs_s_weight * r.squaredNorm();
        if (grad) {
          Vector f = log_f.array().exp();
          dz += obs_s_weight * (2.0 * r - 2.0 * r.sum() * f);
        }
      }
      if (grad) accumulate(x, dz);
    }
  }
  return total;
}

double RefinedObjective(const LRParams& params, const Matrix& features,
                        const Labels& labels, const std::vector<Index>& rows,
                        const ObservedTerms* obs, LRParams* grad) {
  const double n = static_cast<double>(rows.size());
  const double n_p = obs ? static_cast<double>(obs->count()) : 0.0;
  Require(n + n_p > 0, "objective over an empty sample");
  const double obs_ce = n_p > 0 ? obs->beta / (n + n_p) : 0.0;
  const double obs_s = n_p > 0 ? obs->alpha / n_p : 0.0;
  return SoftmaxObjective(params, features, labels, rows, 1.0 / (n + n_p),
                          obs, obs_ce, obs_s, grad);
}

LRParams FitSoftmax(const Matrix& features, const Labels& labels, int k,
                    const TrainConfig& cfg, const ObservedTerms* obs) {
  Require(k >= 2, "need at least two classes");
  Require(features.rows() > 0 && features.cols() > 0, "empty training set");
  Require(static_cast<Index>(labels.size()) == features.rows(),
          "one label per row required");
  Require(cfg.learning_rate > 0 && cfg.max_epochs > 0 && cfg.patience >= 1,
          "learning rate, max epochs and patience must be positive");
  Require(cfg.validation_fraction >= 0 && cfg.validation_fraction < 1,
          "validation_fraction must lie in [0,1)");
  Require(cfg.batch_size >= 0, "batch_size must be nonnegative");
  for (int y : labels) Require(y >= 0 && y < k, "label out of range");
  if (obs != nullptr) {
    Require(obs->features.cols() == features.cols() || obs->count() == 0,
            "observed features have the wrong width");
    Require(obs->scores.rows() == 0 || obs->scores.rows() == obs->count(),
            "one observed score per observed row");
    Require(obs->labels.empty() ||
                static_cast<Index>(obs->labels.size()) == obs->count(),
            "one observed label per observed row");
  }

  const Index n = features.rows();
  std::mt19937_64 rng(cfg.seed);
  std::vector<Index> order(n);
  std::iota(order.begin(), order.end(), Index{0});
  std::shuffle(order.begin(), order.end(), rng);
  const Index n_val =
      static_cast<Index>(std::floor(cfg.validation_fraction * n));
  std::vector<Index> val(order.begin(), order.begin() + n_val);
  std::vector<Index> train(order.begin() + n_val, order.end());
  Require(!train.empty(), "validation split leaves no training rows");
  const std::vector<Index>& monitor = val.empty() ? train : val;

  const double n_t = static_cast<double>(train.size());
  const double n_p = obs ? static_cast<double>(obs->count()) : 0.0;
  const double obs_ce = n_p > 0 ? obs->beta / (n_t + n_p) : 0.0;
  const double obs_s = n_p > 0 ? obs->alpha / n_p : 0.0;
  const Index batch = cfg.batch_size == 0
                          ? static_cast<Index>(train.size())
                          : std::min<Index>(cfg.batch_size, train.size());

  const Index d = features.cols();
  LRParams params = ZeroLike(k, d);
  LRParams best = params;
  LRParams m1 = ZeroLike(k, d), m2 = ZeroLike(k, d);
  double best_loss = RefinedObjective(params, features, labels, monitor, obs,
                                      nullptr);
  int since_best = 0;
  long step = 0;
  std::vector<Index> rows;
  rows.reserve(batch);

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(train.begin(), train.end(), rng);
    for (std::size_t start = 0; start < train.size(); start += batch) {
      const std::size_t end = std::min(train.size(), start + batch);
      rows.assign(train.begin() + start, train.begin() + end);
      const double ce_weight =
          n_t / (static_cast<double>(rows.size()) * (n_t + n_p));
      LRParams grad = ZeroLike(k, d);
      const double loss =
          SoftmaxObjective(params, features, labels, rows, ce_weight, obs,
                           obs_ce, obs_s, &grad);
      if (!std::isfinite(loss)) throw DivergenceError(epoch);

      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      auto adam = [&](auto& theta, auto& m, auto& v, const auto& g) {
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
        theta.array() -= cfg.learning_rate * (m.array() / c1) /
                         ((v.array() / c2).sqrt() + cfg.adam_epsilon);
      };
      adam(params.W, m1.W, m2.W, grad.W);
      adam(params.b, m1.b, m2.b, grad.b);
    }
    const double val_loss =
        RefinedObjective(params, features, labels, monitor, obs, nullptr);
    if (!std::isfinite(val_loss)) throw DivergenceError(epoch);
    if (val_loss < best_loss) {
      best_loss = val_loss;
      best = params;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return best;
}

}  // namespace internal

LRParams Train(const Matrix& features, const Labels& labels, int k,
               const TrainConfig& cfg) {
  return internal::FitSoftmax(features, labels, k, cfg, nullptr);
}

Vector Softmax(const Vector& z) {
  Vector e = (z.array() - z.maxCoeff()).exp();
  return e / e.sum();
}

Vector Confidence(const LRParams& params, const Vector& x) {
  Require(x.size() == params.W.cols(), "feature vector has the wrong length");
  return Softmax(params.W * x + params.b);
}

Matrix Confidences(const LRParams& params, const Matrix& features) {
  Require(features.cols() == params.W.cols(),
          "feature count does not match the model");
  Matrix out(features.rows(), params.k());
  for (Index i = 0; i < features.rows(); ++i) {
    out.row(i) =
        Softmax(params.W * features.row(i).transpose() + params.b).transpose();
  }
  return out;
}

Vector LogRatio(const Vector& c) {
  Require(c.size() >= 2, "need at least two probabilities");
  Vector clamped = c.cwiseMax(kProbabilityFloor).cwiseMin(1.0);
  Vector logs = clamped.array().log();
  return logs.tail(c.size() - 1) - logs.head(c.size() - 1);
}

int Predict(const LRParams& params, const Vector& x) {
  Vector z = params.W * x + params.b;
  int best = 0;
  for (int c = 1; c < z.size(); ++c) {
    if (z(c) > z(best)) best = c;
  }
  return best;
}

double Accuracy(const LRParams& params, const Matrix& features,
                const Labels& labels) {
  CheckShapes(params, features, labels);
  Require(features.rows() > 0, "accuracy of an empty set");
  Index hits = 0;
  for (Index i = 0; i < features.rows(); ++i) {
    if (Predict(params, features.row(i).transpose()) == labels[i]) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(features.rows());
}

double CrossEntropy(const LRParams& params, const Matrix& features,
                    const Labels& labels) {
  CheckShapes(params, features, labels);
  std::vector<Index> rows(features.rows());
  std::iota(rows.begin(), rows.end(), Index{0});
  return internal::RefinedObjective(params, features, labels, rows, nullptr,
                                    nullptr);
}

LRParams CrossEntropyGradient(const LRParams& params, const Matrix& features,
                              const Labels& labels) {
  CheckShapes(params, features, labels);
  std::vector<Index> rows(features.rows());
  std::iota(rows.begin(), rows.end(), Index{0});
  LRParams grad = ZeroLike(params.k(), params.dims());
  internal::RefinedObjective(params, features, labels, rows, nullptr, &grad);
  return grad;
}

PartitionedModel PartitionParams(const LRParams& params,
                                 const Partition& partition) {
  Require(partition.total() == params.dims(),
          "partition does not cover the model's features");
  PartitionedModel pm;
  pm.W_act = SelectCols(params.W, partition.active);
  pm.W_pas = SelectCols(params.W, partition.passive);
  pm.b = params.b;
  pm.partition = partition;
  return pm;
}

LRParams Reassemble(const PartitionedModel& pm) {
  LRParams p;
  p.W.resize(pm.W_pas.rows(), pm.partition.total());
  for (std::size_t j = 0; j < pm.partition.active.size(); ++j) {
    p.W.col(pm.partition.active[j]) = pm.W_act.col(j);
  }
  for (std::size_t j = 0; j < pm.partition.passive.size(); ++j) {
    p.W.col(pm.partition.passive[j]) = pm.W_pas.col(j);
  }
  p.b = pm.b;
  return p;
}

std::string ModelToJson(const LRParams& params,
                        const std::vector<Index>& feature_indices) {
  Require(feature_indices.empty() ||
              static_cast<Index>(feature_indices.size()) == params.dims(),
          "one feature index per model column");
  internal::Json w = internal::Json::array();
  for (Index i = 0; i < params.W.rows(); ++i) {
    for (Index j = 0; j < params.W.cols(); ++j) w.push_back(params.W(i, j));
  }
  std::vector<Index> idx = feature_indices;
  if (idx.empty()) {
    idx.resize(params.dims());
    std::iota(idx.begin(), idx.end(), Index{0});
  }
  internal::Json j = {{"k", params.k()},
                      {"d_f", params.dims()},
                      {"W", w},
                      {"b", internal::VectorToJson(params.b)},
                      {"feature_indices", idx}};
  return j.dump(2);
}

LRParams ModelFromJson(const std::string& json_text,
                       std::vector<Index>* feature_indices) {
  try {
    internal::Json j = internal::ParseJson(json_text);
    const int k = j.at("k").get<int>();
    const Index d = j.at("d_f").get<Index>();
    const auto& w = j.at("W");
    Require(k >= 2 && d >= 0, "bad model dimensions");
    Require(static_cast<Index>(w.size()) == k * d,
            "W must hold k * d_f entries");
    LRParams p;
    p.W.resize(k, d);
    for (Index i = 0; i < k; ++i) {
      for (Index c = 0; c < d; ++c) p.W(i, c) = w[i * d + c].get<double>();
    }
    p.b = internal::VectorFromJson(j.at("b"));
    Require(p.b.size() == k, "b must have k entries");
    if (feature_indices != nullptr) {
      *feature_indices = j.value("feature_indices", std::vector<Index>{});
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad model JSON: ") + e.what());
  }
}

}  // namespace vflpi
