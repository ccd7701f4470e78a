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

// Command-line front end. Every subcommand reads a JSON experiment config and
// writes CSV or JSON to --out (stdout when omitted). Skipped cells and other
// notes go to stderr.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "vflpi/harness.h"

namespace {

using vflpi::ExperimentConfig;
using vflpi::Index;
using Json = nlohmann::json;

std::string ReadFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw vflpi::InvalidArgument("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void Emit(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw vflpi::InvalidArgument("cannot write " + out_path);
  out << text;
}

void PrintNotes(const std::vector<std::string>& notes) {
  for (const auto& n : notes) std::cerr << "note: " << n << '\n';
}

Json MatrixJson(const vflpi::Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

struct Common {
  std::string config_path;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<Index> max_windows;
  std::optional<int> threads;

  ExperimentConfig Load() const {
    ExperimentConfig cfg =
        vflpi::ExperimentConfigFromJson(ReadFile(config_path));
    if (seed) {
      cfg.seed = *seed;
      cfg.split.seed = *seed;
      cfg.train.seed = *seed;
      cfg.pps.schedule.seed = *seed;
    }
    if (max_windows) cfg.max_windows = *max_windows;
    if (threads) cfg.threads = *threads;
    return cfg;
  }
};

void AddCommon(CLI::App* sub, Common* c) {
  sub->add_option("--config", c->config_path, "experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  sub->add_option("--out", c->out, "output file (default: stdout)");
  sub->add_option("--seed", c->seed, "override the config seed");
  sub->add_option("--max-windows", c->max_windows,
                  "cap on moving-window positions (0 = all)");
  sub->add_option("--threads", c->threads, "grid worker threads");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature inference attacks and parameter-distortion defenses "
               "for vertically federated logistic regression"};
  app.require_subcommand(1);

  Common ingest_opts, train_opts, attack_opts, defend_opts, pi_opts, cov_opts,
      acc_opts;
  auto* ingest = app.add_subcommand("ingest", "load, encode and split a dataset");
  AddCommon(ingest, &ingest_opts);
  auto* train = app.add_subcommand("train", "train the joint VFL model");
  AddCommon(train, &train_opts);
  auto* attack = app.add_subcommand("attack", "moving-window attack grid");
  AddCommon(attack, &attack_opts);
  auto* defend = app.add_subcommand("defend", "distort one passive block");
  AddCommon(defend, &defend_opts);
  std::string case_name = "i";
  double epsilon = 0.0;
  Index d = 1;
  Index window_start = 0;
  defend->add_option("--case", case_name, "i, ii, iii or iv");
  defend->add_option("--epsilon", epsilon, "interpretability budget")
      ->required();
  defend->add_option("--d", d, "passive feature count");
  defend->add_option("--window-start", window_start,
                     "first passive feature index");
  auto* pi = app.add_subcommand("sweep-pi", "privacy/interpretability sweep");
  AddCommon(pi, &pi_opts);
  auto* cov = app.add_subcommand("covariance", "feature covariance matrix");
  AddCommon(cov, &cov_opts);
  auto* acc = app.add_subcommand("am-accuracy",
                                 "AM accuracy versus active feature count");
  AddCommon(acc, &acc_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (ingest->parsed()) {
      const auto cfg = ingest_opts.Load();
      const auto prep = vflpi::PrepareData(cfg);
      Json counts = Json::array();
      for (int c = 0; c < prep.data.k; ++c) {
        counts.push_back(std::count(prep.data.labels.begin(),
                                    prep.data.labels.end(), c));
      }
      Json j = {{"dataset", cfg.name},
                {"rows", prep.data.rows()},
                {"features", prep.data.dims()},
                {"feature_names", prep.data.feature_names},
                {"classes", prep.data.k},
                {"class_counts", counts},
                {"train", prep.split.train.size()},
                {"test", prep.split.test.size()},
                {"prediction", prep.split.prediction.size()}};
      Emit(ingest_opts.out, j.dump(2) + "\n");
    } else if (train->parsed()) {
      const auto cfg = train_opts.Load();
      const auto prep = vflpi::PrepareData(cfg);
      const auto model = vflpi::TrainVflModel(cfg, prep);
      const double accuracy = vflpi::Accuracy(
          model, vflpi::SelectRows(prep.data.features, prep.split.test),
          [&] {
            vflpi::Labels y;
            for (Index r : prep.split.test) y.push_back(prep.data.labels[r]);
            return y;
          }());
      std::cerr << "test accuracy: " << accuracy << '\n';
      std::vector<Index> all(static_cast<std::size_t>(prep.data.dims()));
      for (Index i = 0; i < prep.data.dims(); ++i) all[i] = i;
      Emit(train_opts.out, vflpi::ModelToJson(model, all) + "\n");
    } else if (attack->parsed()) {
      const auto result = vflpi::RunAttackGrid(attack_opts.Load());
      PrintNotes(result.notes);
      Emit(attack_opts.out, vflpi::AttackGridCsv(result));
    } else if (defend->parsed()) {
      const auto cfg = defend_opts.Load();
      const auto prep = vflpi::PrepareData(cfg);
      const auto model = vflpi::TrainVflModel(cfg, prep);
      const auto part =
          vflpi::WindowPartition(prep.data.dims(), d, window_start);
      const auto pm = vflpi::PartitionParams(model, part);
      const auto stats = vflpi::ComputePassiveStats(vflpi::SelectCols(
          vflpi::SelectRows(prep.data.features, prep.split.train),
          part.passive));
      const auto c = vflpi::PpsCaseFromName(case_name);
      if (!vflpi::PpsCaseApplies(c, d, prep.data.k)) {
        throw vflpi::InvalidArgument("case " + case_name +
                                     " does not apply to d=" +
                                     std::to_string(d));
      }
      auto schedule = cfg.pps.schedule;
      const auto o = vflpi::RunPps(c, pm.W_pas, stats, epsilon, schedule);
      Json j = {{"case", vflpi::PpsCaseName(c)},
                {"d", d},
                {"window_start", window_start},
                {"passive_features", part.passive},
                {"epsilon", o.epsilon},
                {"g_achieved", o.g_achieved},
                {"mse_predicted", o.mse_predicted},
                {"status", vflpi::PpsStatusName(o.status)},
                {"diagnostics", o.diagnostics},
                {"W_pas", MatrixJson(pm.W_pas)},
                {"W_n", MatrixJson(o.W_n)}};
      if (o.R) j["R"] = MatrixJson(*o.R);
      Emit(defend_opts.out, j.dump(2) + "\n");
    } else if (pi->parsed()) {
      const auto result = vflpi::RunPiGrid(pi_opts.Load());
      PrintNotes(result.notes);
      Emit(pi_opts.out, vflpi::PiGridCsv(result));
    } else if (cov->parsed()) {
      const auto prep = vflpi::PrepareData(cov_opts.Load());
      Emit(cov_opts.out,
           vflpi::MatrixCsv(vflpi::Covariance(prep.data.features)));
    } else if (acc->parsed()) {
      Emit(acc_opts.out, vflpi::AccuracyCsv(vflpi::RunAmAccuracy(
                             acc_opts.Load())));
    }
  } catch (const vflpi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
