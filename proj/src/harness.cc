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

#include "vflpi/harness.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <future>
#include <random>
#include <set>
#include <sstream>

#include "format_util.h"
#include "json_util.h"

namespace vflpi {
namespace {

using internal::FormatDouble;
using internal::Json;

const std::vector<std::string> kMethods = {"half", "ls_exact",
                                           "halfstar_exact", "am", "ram"};

std::uint64_t SplitMix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t CellSeed(std::uint64_t seed, Index d, Index start) {
  return SplitMix(SplitMix(SplitMix(seed) ^ static_cast<std::uint64_t>(d)) ^
                  static_cast<std::uint64_t>(start));
}

// Runs fn(i) for i in [0, n) on up to `threads` threads; results keep index
// order.
template <typename T>
std::vector<T> ParallelMap(std::size_t n, int threads,
                           const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(n);
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  std::vector<std::future<void>> futures;
  for (std::size_t w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < n; i += workers) out[i] = fn(i);
    }));
  }
  for (auto& f : futures) f.get();
  return out;
}

ColumnKind KindFromName(const std::string& s) {
  if (s == "numeric") return ColumnKind::kNumeric;
  if (s == "categorical") return ColumnKind::kCategorical;
  if (s == "label") return ColumnKind::kLabel;
  if (s == "ignore") return ColumnKind::kIgnore;
  throw InvalidArgument("unknown column kind '" + s + "'");
}

const char* KindName(ColumnKind k) {
  switch (k) {
    case ColumnKind::kNumeric:
      return "numeric";
    case ColumnKind::kCategorical:
      return "categorical";
    case ColumnKind::kLabel:
      return "label";
    case ColumnKind::kIgnore:
      return "ignore";
  }
  return "numeric";
}

CsvSchema SchemaFromJson(const Json& j) {
  CsvSchema s;
  const std::string delim = j.value("delimiter", std::string(","));
  Require(delim.size() == 1, "delimiter must be one character");
  s.delimiter = delim[0];
  s.strip_label_period = j.value("strip_label_period", false);
  for (const auto& c : j.at("columns")) {
    s.columns.push_back(
        {c.at("name").get<std::string>(),
         KindFromName(c.value("kind", std::string("numeric")))});
  }
  return s;
}

Json SchemaToJson(const CsvSchema& s) {
  Json cols = Json::array();
  for (const auto& c : s.columns) {
    cols.push_back({{"name", c.name}, {"kind", KindName(c.kind)}});
  }
  return {{"delimiter", std::string(1, s.delimiter)},
          {"strip_label_period", s.strip_label_period},
          {"columns", cols}};
}

void CheckKeys(const Json& j, const std::set<std::string>& allowed,
               const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) {
      throw InvalidArgument("unknown key '" + it.key() + "' in " + where);
    }
  }
}

Vector ActiveOf(const Matrix& features, Index row, const Partition& p) {
  Vector y(static_cast<Index>(p.active.size()));
  for (std::size_t j = 0; j < p.active.size(); ++j) {
    y(j) = features(row, p.active[j]);
  }
  return y;
}

Vector PassiveOf(const Matrix& features, Index row, const Partition& p) {
  Vector x(static_cast<Index>(p.passive.size()));
  for (std::size_t j = 0; j < p.passive.size(); ++j) {
    x(j) = features(row, p.passive[j]);
  }
  return x;
}

std::vector<Index> TimeRows(const Split& split) {
  std::vector<Index> rows = split.train;
  rows.insert(rows.end(), split.prediction.begin(), split.prediction.end());
  return rows;
}

// Estimates passive features for `rows` from log-ratio vectors and returns
// the clipped MSE.
double AttackMse(const PartitionedModel& pm, const Matrix& features,
                 const std::vector<Index>& rows,
                 const std::function<Vector(Index, const Vector&)>& c_prime) {
  const Index d = pm.partition.d();
  const int k = static_cast<int>(pm.b.size());
  const Matrix J = BuildJ(k);
  const Matrix A = J * pm.W_pas;
  std::optional<LeastSquaresSolver> ls;
  std::optional<HalfStarSolver> hs;
  if (d < k) {
    ls.emplace(A);
  } else {
    hs.emplace(A);
  }
  const Vector Jb = J * pm.b;
  Matrix truth(static_cast<Index>(rows.size()), d);
  Matrix est(static_cast<Index>(rows.size()), d);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const Index r = rows[i];
    const Vector y = ActiveOf(features, r, pm.partition);
    const Vector b_prime = c_prime(r, y) - J * (pm.W_act * y) - Jb;
    const Vector x_hat = ls ? ls->Solve(b_prime) : hs->Solve(b_prime);
    truth.row(i) = PassiveOf(features, r, pm.partition).transpose();
    est.row(i) = ClipToBox(x_hat).transpose();
  }
  return EmpiricalMse(truth, est);
}

Matrix ActiveBlock(const Matrix& features, const std::vector<Index>& rows,
                   const Partition& p) {
  return SelectCols(SelectRows(features, rows), p.active);
}

Labels LabelsOf(const Dataset& ds, const std::vector<Index>& rows) {
  Labels out;
  out.reserve(rows.size());
  for (Index r : rows) out.push_back(ds.labels[r]);
  return out;
}

double EpsilonScale(PpsCase c, const Matrix& W_pas) {
  if (c == PpsCase::kI || c == PpsCase::kII) {
    const double dk = static_cast<double>(W_pas.rows() * W_pas.cols());
    return 4.0 * (W_pas.transpose() * W_pas).trace() / dk;
  }
  return DegenerateEpsilon(W_pas);
}

}  // namespace

ExperimentConfig ExperimentConfigFromJson(const std::string& json_text) {
  try {
    Json j = internal::ParseJson(json_text);
    Require(j.is_object(), "config must be a JSON object");
    CheckKeys(j,
              {"name", "dataset", "split", "train", "d_values", "methods",
               "ram", "pps", "seed", "max_windows", "window_starts",
               "per_window_rows", "threads"},
              "config");
    ExperimentConfig cfg;
    cfg.name = j.value("name", cfg.name);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.split.seed = cfg.seed;
    cfg.train.seed = cfg.seed;

    const Json& ds = j.at("dataset");
    CheckKeys(ds, {"preset", "path", "csv", "schema", "synthetic", "encoding"},
              "dataset");
    if (ds.contains("synthetic")) {
      cfg.dataset.synthetic =
          internal::SyntheticSpecFromJsonValue(ds["synthetic"]);
    } else if (ds.contains("preset")) {
      cfg.dataset.preset = ds["preset"].get<std::string>();
      cfg.dataset.path = ds.at("path").get<std::string>();
      PresetSchema(cfg.dataset.preset);  // validates the name
    } else {
      cfg.dataset.path = ds.at("csv").get<std::string>();
      cfg.dataset.schema = SchemaFromJson(ds.at("schema"));
    }
    const std::string enc = ds.value("encoding", std::string("target_mean"));
    if (enc == "target_mean") {
      cfg.dataset.encoding = CategoricalEncoding::kTargetMean;
    } else if (enc == "class_prior_blend") {
      cfg.dataset.encoding = CategoricalEncoding::kClassPriorBlend;
    } else {
      throw InvalidArgument("unknown encoding '" + enc + "'");
    }

    if (j.contains("split")) {
      const Json& s = j["split"];
      CheckKeys(s, {"prediction_fraction", "test_fraction_of_train", "seed"},
                "split");
      cfg.split.prediction_fraction =
          s.value("prediction_fraction", cfg.split.prediction_fraction);
      cfg.split.test_fraction_of_train =
          s.value("test_fraction_of_train", cfg.split.test_fraction_of_train);
      cfg.split.seed = s.value("seed", cfg.split.seed);
    }
    if (j.contains("train")) {
      const Json& t = j["train"];
      CheckKeys(t,
                {"learning_rate", "max_epochs", "patience",
                 "validation_fraction", "batch_size", "seed"},
                "train");
      cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
      cfg.train.max_epochs = t.value("max_epochs", cfg.train.max_epochs);
      cfg.train.patience = t.value("patience", cfg.train.patience);
      cfg.train.validation_fraction =
          t.value("validation_fraction", cfg.train.validation_fraction);
      cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
      cfg.train.seed = t.value("seed", cfg.train.seed);
    }
    if (j.contains("d_values")) {
      cfg.d_values = j["d_values"].get<std::vector<Index>>();
    }
    if (j.contains("methods")) {
      cfg.methods = j["methods"].get<std::vector<std::string>>();
      for (const auto& m : cfg.methods) {
        Require(std::find(kMethods.begin(), kMethods.end(), m) !=
                    kMethods.end(),
                "unknown attack method '" + m + "'");
      }
    }
    if (j.contains("ram")) {
      const Json& r = j["ram"];
      CheckKeys(r, {"n_p", "score_mode", "alpha", "beta"}, "ram");
      cfg.ram.n_p = r.value("n_p", cfg.ram.n_p);
      const std::string mode = r.value("score_mode", std::string("exact"));
      if (mode == "exact") {
        cfg.ram.mode = ScoreMode::kExact;
      } else if (mode == "labels") {
        cfg.ram.mode = ScoreMode::kLabels;
        cfg.ram.alpha = 0.0;
        cfg.ram.beta = 1.0;
      } else {
        throw InvalidArgument("unknown score_mode '" + mode + "'");
      }
      cfg.ram.alpha = r.value("alpha", cfg.ram.alpha);
      cfg.ram.beta = r.value("beta", cfg.ram.beta);
    }
    cfg.pps.schedule.seed = cfg.seed;
    if (j.contains("pps")) {
      const Json& p = j["pps"];
      CheckKeys(p,
                {"cases", "epsilons", "epsilon_fractions", "lambda_min",
                 "lambda_max", "starts", "entry_levels", "secret_epsilon",
                 "random_sign"},
                "pps");
      for (const auto& c : p.value("cases", std::vector<std::string>{})) {
        cfg.pps.cases.push_back(PpsCaseFromName(c));
      }
      cfg.pps.epsilons = p.value("epsilons", cfg.pps.epsilons);
      cfg.pps.epsilon_fractions =
          p.value("epsilon_fractions", cfg.pps.epsilon_fractions);
      cfg.pps.schedule.lambda_min =
          p.value("lambda_min", cfg.pps.schedule.lambda_min);
      cfg.pps.schedule.lambda_max =
          p.value("lambda_max", cfg.pps.schedule.lambda_max);
      cfg.pps.schedule.starts = p.value("starts", cfg.pps.schedule.starts);
      cfg.pps.schedule.entry_levels =
          p.value("entry_levels", cfg.pps.schedule.entry_levels);
      cfg.pps.secret_epsilon = p.value("secret_epsilon", false);
      cfg.pps.random_sign = p.value("random_sign", false);
    }
    cfg.max_windows = j.value("max_windows", cfg.max_windows);
    if (j.contains("window_starts")) {
      cfg.window_starts = j["window_starts"].get<std::vector<Index>>();
    }
    cfg.per_window_rows = j.value("per_window_rows", cfg.per_window_rows);
    cfg.threads = j.value("threads", cfg.threads);
    return cfg;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("bad experiment config: ") + e.what());
  }
}

std::string ExperimentConfigToJson(const ExperimentConfig& cfg) {
  Json ds;
  if (cfg.dataset.synthetic) {
    ds["synthetic"] = internal::SyntheticSpecToJsonValue(*cfg.dataset.synthetic);
  } else if (!cfg.dataset.preset.empty()) {
    ds["preset"] = cfg.dataset.preset;
    ds["path"] = cfg.dataset.path;
  } else {
    ds["csv"] = cfg.dataset.path;
    if (cfg.dataset.schema) ds["schema"] = SchemaToJson(*cfg.dataset.schema);
  }
  ds["encoding"] = cfg.dataset.encoding == CategoricalEncoding::kTargetMean
                       ? "target_mean"
                       : "class_prior_blend";
  Json cases = Json::array();
  for (PpsCase c : cfg.pps.cases) cases.push_back(PpsCaseName(c));
  Json j = {
      {"name", cfg.name},
      {"dataset", ds},
      {"split",
       {{"prediction_fraction", cfg.split.prediction_fraction},
        {"test_fraction_of_train", cfg.split.test_fraction_of_train},
        {"seed", cfg.split.seed}}},
      {"train",
       {{"learning_rate", cfg.train.learning_rate},
        {"max_epochs", cfg.train.max_epochs},
        {"patience", cfg.train.patience},
        {"validation_fraction", cfg.train.validation_fraction},
        {"batch_size", cfg.train.batch_size},
        {"seed", cfg.train.seed}}},
      {"d_values", cfg.d_values},
      {"methods", cfg.methods},
      {"ram",
       {{"n_p", cfg.ram.n_p},
        {"alpha", cfg.ram.alpha},
        {"beta", cfg.ram.beta},
        {"score_mode",
         cfg.ram.mode == ScoreMode::kExact ? "exact" : "labels"}}},
      {"pps",
       {{"cases", cases},
        {"epsilons", cfg.pps.epsilons},
        {"epsilon_fractions", cfg.pps.epsilon_fractions},
        {"lambda_min", cfg.pps.schedule.lambda_min},
        {"lambda_max", cfg.pps.schedule.lambda_max},
        {"starts", cfg.pps.schedule.starts},
        {"entry_levels", cfg.pps.schedule.entry_levels},
        {"secret_epsilon", cfg.pps.secret_epsilon},
        {"random_sign", cfg.pps.random_sign}}},
      {"seed", cfg.seed},
      {"max_windows", cfg.max_windows},
      {"window_starts", cfg.window_starts},
      {"per_window_rows", cfg.per_window_rows},
      {"threads", cfg.threads}};
  return j.dump(2);
}

PreparedData PrepareData(const ExperimentConfig& cfg) {
  PreparedData prep;
  if (cfg.dataset.synthetic) {
    prep.data = GenerateSynthetic(*cfg.dataset.synthetic);
    prep.split = SplitDataset(prep.data, cfg.split);
    return prep;
  }
  const CsvSchema schema = cfg.dataset.schema
                               ? *cfg.dataset.schema
                               : PresetSchema(cfg.dataset.preset);
  RawDataset raw = LoadCsv(cfg.dataset.path, schema);
  // The split only looks at labels, so it can precede encoding.
  Dataset labels_only;
  labels_only.labels = raw.labels;
  labels_only.k = raw.num_classes();
  labels_only.features.resize(raw.rows(), 0);
  prep.split = SplitDataset(labels_only, cfg.split);
  prep.data = Normalize(EncodeCategorical(
      raw, MaskOf(prep.split.train, raw.rows()), cfg.dataset.encoding));
  return prep;
}

std::vector<Index> GridWindowStarts(const ExperimentConfig& cfg, Index d_t) {
  if (!cfg.window_starts.empty()) {
    for (Index s : cfg.window_starts) {
      Require(s >= 0 && s < d_t, "window start out of range");
    }
    return cfg.window_starts;
  }
  const Index count = cfg.max_windows > 0 ? std::min(cfg.max_windows, d_t) : d_t;
  std::vector<Index> starts;
  for (Index s = 0; s < count; ++s) starts.push_back(s);
  return starts;
}

LRParams TrainVflModel(const ExperimentConfig& cfg, const PreparedData& prep) {
  const Dataset& ds = prep.data;
  return Train(SelectRows(ds.features, prep.split.train),
               LabelsOf(ds, prep.split.train), ds.k, cfg.train);
}

bool MethodApplies(const std::string& method, Index d, int k,
                   std::string* reason) {
  auto fail = [&](const std::string& why) {
    if (reason) *reason = why;
    return false;
  };
  if (std::find(kMethods.begin(), kMethods.end(), method) == kMethods.end()) {
    return fail("unknown method");
  }
  if (method == "ls_exact" && d >= k) return fail("ls_exact needs d < k");
  if (method == "halfstar_exact" && d < k) {
    return fail("halfstar_exact needs d >= k");
  }
  return true;
}

double RunAttackCell(const ExperimentConfig& cfg, const PreparedData& prep,
                     const LRParams& vfl, Index d, Index window_start,
                     const std::string& method) {
  const Dataset& ds = prep.data;
  std::string reason;
  Require(MethodApplies(method, d, ds.k, &reason), reason);
  const Partition part = WindowPartition(ds.dims(), d, window_start);
  const PartitionedModel pm = PartitionParams(vfl, part);
  const std::vector<Index> time_rows = TimeRows(prep.split);
  const auto& pred_rows = prep.split.prediction;

  if (method == "half") {
    Matrix truth(static_cast<Index>(time_rows.size()), d);
    for (std::size_t i = 0; i < time_rows.size(); ++i) {
      truth.row(i) = PassiveOf(ds.features, time_rows[i], part).transpose();
    }
    return EmpiricalMse(truth, Matrix::Constant(truth.rows(), d, 0.5));
  }

  auto exact = [&](Index r, const Vector&) {
    return LogRatio(Confidence(vfl, ds.features.row(r).transpose()));
  };
  if (method == "ls_exact" || method == "halfstar_exact") {
    return AttackMse(pm, ds.features, pred_rows, exact);
  }

  TrainConfig tc = cfg.train;
  tc.seed = CellSeed(cfg.seed, d, window_start);
  const Matrix train_active = ActiveBlock(ds.features, prep.split.train, part);
  const Labels train_labels = LabelsOf(ds, prep.split.train);
  LRParams am;
  if (method == "am") {
    am = TrainAdversaryModel(train_active, train_labels, ds.k, tc);
  } else {
    const Index n_p =
        std::min<Index>(cfg.ram.n_p, static_cast<Index>(pred_rows.size()));
    std::vector<Observation> observed;
    for (Index i = 0; i < n_p; ++i) {
      const Index r = pred_rows[i];
      Observation o;
      o.active_features = ActiveOf(ds.features, r, part);
      const Vector c = Confidence(vfl, ds.features.row(r).transpose());
      if (cfg.ram.mode == ScoreMode::kExact) {
        o.score = c;
      } else {
        Eigen::Index arg;
        c.maxCoeff(&arg);
        o.label = static_cast<int>(arg);
      }
      observed.push_back(std::move(o));
    }
    RamConfig rc;
    rc.alpha = cfg.ram.alpha;
    rc.beta = cfg.ram.beta;
    rc.observed = std::move(observed);
    rc.base = tc;
    am = TrainRefinedAdversaryModel(rc, train_active, train_labels, ds.k);
  }
  auto estimated = [&](Index, const Vector& y) {
    return EstimateScore(am, y).c_prime;
  };
  return AttackMse(pm, ds.features, time_rows, estimated);
}

AttackGridResult RunAttackGrid(const ExperimentConfig& cfg) {
  const PreparedData prep = PrepareData(cfg);
  const LRParams vfl = TrainVflModel(cfg, prep);
  const Index d_t = prep.data.dims();
  const int k = prep.data.k;
  AttackGridResult result;

  struct Cell {
    Index d;
    Index start;
    std::string method;
  };
  std::vector<Cell> cells;
  for (Index d : cfg.d_values) {
    if (d < 1 || d >= d_t) {
      result.notes.push_back("d=" + std::to_string(d) +
                             " skipped: need 1 <= d < d_t");
      continue;
    }
    for (const auto& method : cfg.methods) {
      std::string reason;
      if (!MethodApplies(method, d, k, &reason)) {
        result.notes.push_back("d=" + std::to_string(d) + " " + method +
                               " skipped: " + reason);
        continue;
      }
      for (Index s : GridWindowStarts(cfg, d_t)) cells.push_back({d, s, method});
    }
  }
  struct CellResult {
    double mse = 0.0;
    std::string error;
  };
  const auto mses = ParallelMap<CellResult>(
      cells.size(), cfg.threads, [&](std::size_t i) {
        CellResult r;
        try {
          r.mse = RunAttackCell(cfg, prep, vfl, cells[i].d, cells[i].start,
                                cells[i].method);
        } catch (const Error& e) {
          r.error = e.what();
        }
        return r;
      });

  std::size_t i = 0;
  while (i < cells.size()) {
    std::size_t j = i;
    double sum = 0.0;
    Index ok = 0;
    const Index n_p = cells[i].method == "ram" ? cfg.ram.n_p : 0;
    const double alpha = cells[i].method == "ram" ? cfg.ram.alpha : 0.0;
    const double beta = cells[i].method == "ram" ? cfg.ram.beta : 0.0;
    for (; j < cells.size() && cells[j].d == cells[i].d &&
           cells[j].method == cells[i].method;
         ++j) {
      if (!mses[j].error.empty()) {
        result.notes.push_back("d=" + std::to_string(cells[j].d) + " " +
                               cells[j].method + " window " +
                               std::to_string(cells[j].start) +
                               " skipped: " + mses[j].error);
        continue;
      }
      sum += mses[j].mse;
      ++ok;
      if (cfg.per_window_rows) {
        result.rows.push_back({cfg.name, cells[j].start, cells[j].d,
                               cells[j].method, n_p, alpha, beta,
                               mses[j].mse});
      }
    }
    if (ok > 0) {
      result.rows.push_back({cfg.name, -1, cells[i].d, cells[i].method, n_p,
                             alpha, beta, sum / static_cast<double>(ok)});
    }
    i = j;
  }
  return result;
}

std::string AttackGridCsv(const AttackGridResult& result) {
  std::ostringstream out;
  out << AttackCsvHeader() << '\n';
  for (const auto& r : result.rows) out << AttackCsvRow(r) << '\n';
  return out.str();
}

double SimulateDistortedAttack(const LRParams& vfl, const Partition& partition,
                               const Matrix& W_n, const Matrix& features,
                               bool half_star) {
  const PartitionedModel pm = PartitionParams(vfl, partition);
  const Matrix J = BuildJ(vfl.k());
  const Matrix A_n = J * W_n;
  std::optional<LeastSquaresSolver> ls;
  std::optional<HalfStarSolver> hs;
  if (half_star) {
    hs.emplace(A_n);
  } else {
    ls.emplace(A_n);
  }
  const Vector Jb = J * pm.b;
  const Index d = partition.d();
  Matrix truth(features.rows(), d), est(features.rows(), d);
  for (Index r = 0; r < features.rows(); ++r) {
    const Vector y = ActiveOf(features, r, partition);
    const Vector c_prime = LogRatio(Confidence(vfl, features.row(r).transpose()));
    const Vector b_prime = c_prime - J * (pm.W_act * y) - Jb;
    truth.row(r) = PassiveOf(features, r, partition).transpose();
    est.row(r) = (hs ? hs->Solve(b_prime) : ls->Solve(b_prime)).transpose();
  }
  return EmpiricalMse(truth, est);
}

PiGridResult RunPiGrid(const ExperimentConfig& cfg) {
  const PreparedData prep = PrepareData(cfg);
  const LRParams vfl = TrainVflModel(cfg, prep);
  const Dataset& ds = prep.data;
  const Index d_t = ds.dims();
  PiGridResult result;
  Require(!cfg.pps.cases.empty(), "pps.cases is empty");

  struct Cell {
    PpsCase c;
    Index d;
    Index start;
  };
  std::vector<Cell> cells;
  for (PpsCase c : cfg.pps.cases) {
    for (Index d : cfg.d_values) {
      if (d < 1 || d >= d_t || !PpsCaseApplies(c, d, ds.k)) {
        result.notes.push_back(std::string("case ") + PpsCaseName(c) +
                               " d=" + std::to_string(d) +
                               " skipped: not applicable for k=" +
                               std::to_string(ds.k));
        continue;
      }
      for (Index s : GridWindowStarts(cfg, d_t)) cells.push_back({c, d, s});
    }
  }

  const Matrix train_features = SelectRows(ds.features, prep.split.train);
  auto blocks = ParallelMap<std::vector<PiRecord>>(
      cells.size(), cfg.threads, [&](std::size_t i) {
        const Cell& cell = cells[i];
        const Partition part = WindowPartition(d_t, cell.d, cell.start);
        const PartitionedModel pm = PartitionParams(vfl, part);
        const PassiveStats stats =
            ComputePassiveStats(SelectCols(train_features, part.passive));
        std::vector<double> grid = cfg.pps.epsilons;
        if (grid.empty()) {
          const double scale = EpsilonScale(cell.c, pm.W_pas);
          for (double f : cfg.pps.epsilon_fractions) grid.push_back(f * scale);
        }
        std::sort(grid.begin(), grid.end());
        std::mt19937_64 rng(CellSeed(cfg.seed, cell.d, cell.start));
        std::vector<PiRecord> rows;
        for (double eps : grid) {
          PenaltySchedule schedule = cfg.pps.schedule;
          schedule.seed = CellSeed(cfg.pps.schedule.seed, cell.d, cell.start);
          double eps_used = eps;
          if (cfg.pps.secret_epsilon) {
            eps_used = std::uniform_real_distribution<double>(0.0, eps)(rng);
          }
          PpsOutcome o;
          if (cfg.pps.random_sign && cell.c == PpsCase::kII) {
            const double sign =
                std::bernoulli_distribution(0.5)(rng) ? -1.0 : 1.0;
            const Matrix R =
                sign * Matrix::Identity(cell.d, cell.d);
            o.W_n = pm.W_pas * R;
            o.R = R;
            o.g_achieved = InterpretabilityGap(pm.W_pas, o.W_n);
            o.mse_predicted = PredictedMseCaseII(R, stats);
          } else {
            o = RunPps(cell.c, pm.W_pas, stats, eps_used, schedule);
          }
          const bool half_star =
              cell.c == PpsCase::kI || cell.c == PpsCase::kIV;
          double empirical;
          try {
            empirical = SimulateDistortedAttack(vfl, part, o.W_n, ds.features,
                                                half_star);
          } catch (const RankDeficientError&) {
            empirical = std::numeric_limits<double>::quiet_NaN();
          }
          rows.push_back({cfg.name, PpsCaseName(cell.c), cell.d, cell.start,
                          eps, o.g_achieved, o.mse_predicted, empirical,
                          PpsStatusName(o.status)});
        }
        return rows;
      });
  for (auto& b : blocks) {
    result.rows.insert(result.rows.end(), b.begin(), b.end());
  }
  return result;
}

std::string PiCsvHeader() {
  return "dataset,case,d,window_start,epsilon,g_achieved,mse_predicted,"
         "mse_empirical,solver_status";
}

std::string PiGridCsv(const PiGridResult& result) {
  std::ostringstream out;
  out << PiCsvHeader() << '\n';
  for (const auto& r : result.rows) {
    out << r.dataset << ',' << r.pps_case << ',' << r.d << ','
        << r.window_start << ',' << FormatDouble(r.epsilon) << ','
        << FormatDouble(r.g_achieved) << ',' << FormatDouble(r.mse_predicted)
        << ',' << FormatDouble(r.mse_empirical) << ',' << r.status << '\n';
  }
  return out.str();
}

Matrix Covariance(const Matrix& features) {
  Require(features.rows() > 0, "covariance of an empty matrix");
  const Matrix centered = features.rowwise() - features.colwise().mean();
  Matrix K = centered.transpose() * centered /
             static_cast<double>(features.rows());
  return 0.5 * (K + K.transpose());
}

std::string MatrixCsv(const Matrix& m) {
  std::ostringstream out;
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << FormatDouble(m(i, j));
    }
    out << '\n';
  }
  return out.str();
}

std::vector<AccuracyRecord> RunAmAccuracy(const ExperimentConfig& cfg) {
  const PreparedData prep = PrepareData(cfg);
  const Dataset& ds = prep.data;
  const Index d_t = ds.dims();
  const LRParams vfl = TrainVflModel(cfg, prep);
  const Labels train_labels = LabelsOf(ds, prep.split.train);
  const Labels test_labels = LabelsOf(ds, prep.split.test);

  std::vector<AccuracyRecord> rows;
  std::vector<Index> ds_sorted = cfg.d_values;
  std::sort(ds_sorted.begin(), ds_sorted.end(), std::greater<Index>());
  for (Index d : ds_sorted) {
    if (d < 1 || d >= d_t) continue;
    const auto starts = GridWindowStarts(cfg, d_t);
    const auto accs = ParallelMap<double>(
        starts.size(), cfg.threads, [&](std::size_t i) {
          const Partition part = WindowPartition(d_t, d, starts[i]);
          TrainConfig tc = cfg.train;
          tc.seed = CellSeed(cfg.seed, d, starts[i]);
          const LRParams am = TrainAdversaryModel(
              ActiveBlock(ds.features, prep.split.train, part), train_labels,
              ds.k, tc);
          return Accuracy(am, ActiveBlock(ds.features, prep.split.test, part),
                          test_labels);
        });
    double sum = 0.0;
    for (double a : accs) sum += a;
    rows.push_back({cfg.name, d_t - d, d, sum / static_cast<double>(accs.size())});
  }
  rows.push_back({cfg.name, d_t, 0,
                  Accuracy(vfl, SelectRows(ds.features, prep.split.test),
                           test_labels)});
  return rows;
}

std::string AccuracyCsv(const std::vector<AccuracyRecord>& rows) {
  std::ostringstream out;
  out << "dataset,active_features,d,accuracy\n";
  for (const auto& r : rows) {
    out << r.dataset << ',' << r.active_features << ',' << r.d << ','
        << FormatDouble(r.accuracy) << '\n';
  }
  return out.str();
}

}  // namespace vflpi
