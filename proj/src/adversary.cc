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

#include "vflpi/adversary.h"

#include <numeric>

#include "json_util.h"
#include "softmax_fit.h"

namespace vflpi {
namespace {

internal::ObservedTerms ToTerms(const RamConfig& cfg, Index width, int k) {
  Require(cfg.alpha >= 0 && cfg.beta >= 0, "alpha and beta must be >= 0");
  internal::ObservedTerms t;
  t.alpha = cfg.alpha;
  t.beta = cfg.beta;
  const Index n_p = static_cast<Index>(cfg.observed.size());
  t.features.resize(n_p, width);
  bool any_score = false, any_label = false;
  for (const auto& o : cfg.observed) {
    any_score |= o.score.has_value();
    any_label |= o.label.has_value();
  }
  Require(cfg.alpha == 0 || n_p == 0 || any_score,
          "alpha > 0 requires observed scores");
  Require(cfg.beta == 0 || n_p == 0 || any_label,
          "beta > 0 requires observed labels");
  if (any_score) t.scores.resize(n_p, k);
  if (any_label) t.labels.resize(n_p);
  for (Index p = 0; p < n_p; ++p) {
    const Observation& o = cfg.observed[p];
    Require(o.active_features.size() == width,
            "observed feature vector has the wrong length");
    t.features.row(p) = o.active_features.transpose();
    if (any_score) {
      Require(o.score.has_value(), "every observation needs a score");
      Require(o.score->size() == k, "observed score must have k entries");
      t.scores.row(p) = o.score->transpose();
    }
    if (any_label) {
      Require(o.label.has_value(), "every observation needs a label");
      Require(*o.label >= 0 && *o.label < k, "observed label out of range");
      t.labels[p] = *o.label;
    }
  }
  return t;
}

std::vector<Index> AllRows(Index n) {
  std::vector<Index> rows(n);
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

}  // namespace

RamConfig RamConfig::ForScores(std::vector<Observation> observed,
                               const TrainConfig& base) {
  return {1.0, 0.0, std::move(observed), base};
}

RamConfig RamConfig::ForLabels(std::vector<Observation> observed,
                               const TrainConfig& base) {
  return {0.0, 1.0, std::move(observed), base};
}

LRParams TrainAdversaryModel(const Matrix& active_features,
                             const Labels& labels, int k,
                             const TrainConfig& cfg) {
  Require(active_features.cols() >= 1, "need at least one active feature");
  return Train(active_features, labels, k, cfg);
}

LRParams TrainRefinedAdversaryModel(const RamConfig& cfg,
                                    const Matrix& active_features,
                                    const Labels& labels, int k) {
  Require(active_features.cols() >= 1, "need at least one active feature");
  if (cfg.observed.empty()) {
    return TrainAdversaryModel(active_features, labels, k, cfg.base);
  }
  internal::ObservedTerms terms = ToTerms(cfg, active_features.cols(), k);
  return internal::FitSoftmax(active_features, labels, k, cfg.base, &terms);
}

double RefinedAdversaryObjective(const LRParams& params, const RamConfig& cfg,
                                 const Matrix& active_features,
                                 const Labels& labels) {
  internal::ObservedTerms terms =
      ToTerms(cfg, active_features.cols(), params.k());
  return internal::RefinedObjective(params, active_features, labels,
                                    AllRows(active_features.rows()), &terms,
                                    nullptr);
}

LRParams RefinedAdversaryGradient(const LRParams& params, const RamConfig& cfg,
                                  const Matrix& active_features,
                                  const Labels& labels) {
  internal::ObservedTerms terms =
      ToTerms(cfg, active_features.cols(), params.k());
  LRParams grad{Matrix::Zero(params.k(), params.dims()),
                Vector::Zero(params.k())};
  internal::RefinedObjective(params, active_features, labels,
                             AllRows(active_features.rows()), &terms, &grad);
  return grad;
}

double ScoreMismatch(const Vector& x, const Vector& y) {
  Require(x.size() == y.size(), "score vectors differ in length");
  Vector lx = x.cwiseMax(kProbabilityFloor).cwiseMin(1.0).array().log();
  Vector ly = y.cwiseMax(kProbabilityFloor).cwiseMin(1.0).array().log();
  return (lx - ly).squaredNorm();
}

ScoreEstimate EstimateScore(const LRParams& am, const Vector& active_features) {
  ScoreEstimate e;
  e.c = Confidence(am, active_features);
  // Log-ratios straight from the logits avoid the clamp for tiny scores.
  Vector z = am.W * active_features + am.b;
  e.c_prime = z.tail(z.size() - 1) - z.head(z.size() - 1);
  return e;
}

std::string ObservationsToJson(const std::vector<Observation>& observed) {
  internal::Json out = internal::Json::array();
  for (const auto& o : observed) {
    internal::Json j = {{"y", internal::VectorToJson(o.active_features)}};
    if (o.score) j["c"] = internal::VectorToJson(*o.score);
    if (o.label) j["u"] = *o.label;
    out.push_back(j);
  }
  return out.dump();
}

std::vector<Observation> ObservationsFromJson(const std::string& json_text) {
  try {
    internal::Json j = internal::ParseJson(json_text);
    Require(j.is_array(), "observations must be a JSON list");
    std::vector<Observation> out;
    for (const auto& e : j) {
      Observation o;
      o.active_features = internal::VectorFromJson(e.at("y"));
      if (e.contains("c")) o.score = internal::VectorFromJson(e["c"]);
      if (e.contains("u")) o.label = e["u"].get<int>();
      out.push_back(std::move(o));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad observations JSON: ") + e.what());
  }
}

}  // namespace vflpi
