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

#include "vflpi/synthetic.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "json_util.h"

namespace vflpi {
namespace {

double NormalCdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

Marginal MarginalFromName(const std::string& name) {
  if (name == "uniform") return Marginal::kUniform;
  if (name == "normal") return Marginal::kNormal;
  if (name == "bernoulli") return Marginal::kBernoulli;
  throw InvalidArgument("unknown marginal '" + name + "'");
}

const char* MarginalName(Marginal m) {
  switch (m) {
    case Marginal::kUniform:
      return "uniform";
    case Marginal::kNormal:
      return "normal";
    case Marginal::kBernoulli:
      return "bernoulli";
  }
  return "uniform";
}

}  // namespace

Dataset GenerateSynthetic(const SyntheticSpec& spec) {
  Require(spec.n > 0, "n must be positive");
  Require(spec.d_t >= 2, "d_t must be at least 2");
  Require(spec.k >= 2, "k must be at least 2");
  Require(spec.marginals.empty() ||
              static_cast<Index>(spec.marginals.size()) == spec.d_t,
          "marginals must list one entry per feature");
  const Index d = spec.d_t;

  Matrix corr;
  if (spec.correlation) {
    corr = *spec.correlation;
    Require(corr.rows() == d && corr.cols() == d,
            "correlation matrix must be d_t x d_t");
  } else {
    Require(spec.rho > -1.0 / (d - 1) && spec.rho < 1.0,
            "rho must lie in (-1/(d_t-1), 1)");
    corr = Matrix::Constant(d, d, spec.rho);
    corr.diagonal().setOnes();
  }
  Eigen::LLT<Matrix> llt(corr);
  Require(llt.info() == Eigen::Success,
          "correlation matrix is not positive definite");
  const Matrix L = llt.matrixL();

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Matrix teacher(spec.k, d);
  for (Index i = 0; i < teacher.size(); ++i) teacher(i) = normal(rng);

  Dataset ds;
  ds.k = spec.k;
  ds.features.resize(spec.n, d);
  ds.labels.resize(spec.n);
  for (Index j = 0; j < d; ++j) ds.feature_names.push_back("x" + std::to_string(j));

  Vector z(d), x(d);
  for (Index i = 0; i < spec.n; ++i) {
    for (Index j = 0; j < d; ++j) z(j) = normal(rng);
    z = L * z;
    for (Index j = 0; j < d; ++j) {
      Marginal m = spec.marginals.empty() ? Marginal::kUniform
                                          : spec.marginals[j];
      switch (m) {
        case Marginal::kUniform:
          x(j) = NormalCdf(z(j));
          break;
        case Marginal::kNormal:
          x(j) = std::clamp(0.5 + z(j) / 6.0, 0.0, 1.0);
          break;
        case Marginal::kBernoulli:
          x(j) = NormalCdf(z(j)) < spec.bernoulli_p ? 1.0 : 0.0;
          break;
      }
    }
    ds.features.row(i) = x.transpose();
    Vector logits = spec.signal * teacher * (x.array() - 0.5).matrix();
    logits.array() -= logits.maxCoeff();
    Vector p = logits.array().exp();
    p /= p.sum();
    double u = unit(rng), acc = 0;
    int label = spec.k - 1;
    for (int c = 0; c < spec.k; ++c) {
      acc += p(c);
      if (u < acc) {
        label = c;
        break;
      }
    }
    ds.labels[i] = label;
  }
  return ds;
}

namespace internal {

SyntheticSpec SyntheticSpecFromJsonValue(const Json& j) {
  Require(j.is_object(), "synthetic spec must be a JSON object");
  SyntheticSpec s;
  s.n = j.value("n", s.n);
  s.d_t = j.value("d_t", s.d_t);
  s.k = j.value("k", s.k);
  s.rho = j.value("rho", s.rho);
  s.bernoulli_p = j.value("bernoulli_p", s.bernoulli_p);
  s.signal = j.value("signal", s.signal);
  s.seed = j.value("seed", s.seed);
  if (j.contains("correlation")) s.correlation = MatrixFromJson(j["correlation"]);
  if (j.contains("marginals")) {
    for (const auto& m : j["marginals"]) {
      s.marginals.push_back(MarginalFromName(m.get<std::string>()));
    }
  }
  return s;
}

Json SyntheticSpecToJsonValue(const SyntheticSpec& s) {
  Json j = {{"n", s.n},           {"d_t", s.d_t},
            {"k", s.k},           {"rho", s.rho},
            {"bernoulli_p", s.bernoulli_p},
            {"signal", s.signal}, {"seed", s.seed}};
  if (s.correlation) j["correlation"] = MatrixToJson(*s.correlation);
  if (!s.marginals.empty()) {
    Json m = Json::array();
    for (Marginal v : s.marginals) m.push_back(MarginalName(v));
    j["marginals"] = m;
  }
  return j;
}

}  // namespace internal

SyntheticSpec SyntheticSpecFromJson(const std::string& json_text) {
  try {
    return internal::SyntheticSpecFromJsonValue(internal::ParseJson(json_text));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad synthetic spec: ") + e.what());
  }
}

std::string SyntheticSpecToJson(const SyntheticSpec& spec) {
  return internal::SyntheticSpecToJsonValue(spec).dump(2);
}

}  // namespace vflpi
