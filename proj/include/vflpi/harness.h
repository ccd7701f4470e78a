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

// Experiment orchestration: dataset preparation, the moving-window attack
// grid, privacy/interpretability sweeps, covariance and AM-accuracy tables.

#ifndef VFLPI_HARNESS_H_
#define VFLPI_HARNESS_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vflpi/adversary.h"
#include "vflpi/attack.h"
#include "vflpi/data.h"
#include "vflpi/defense.h"
#include "vflpi/model.h"
#include "vflpi/synthetic.h"

namespace vflpi {

struct DatasetRef {
  // A named preset ("bank", ...) read from `path`, a custom CSV with
  // `schema`, or a synthetic generator.
  std::string preset;
  std::string path;
  std::optional<CsvSchema> schema;
  std::optional<SyntheticSpec> synthetic;
  CategoricalEncoding encoding = CategoricalEncoding::kTargetMean;
};

enum class ScoreMode { kExact, kLabels };

struct RamSettings {
  Index n_p = 100;
  double alpha = 1.0;
  double beta = 0.0;
  ScoreMode mode = ScoreMode::kExact;
};

struct PpsSettings {
  std::vector<PpsCase> cases;
  // Absolute eps values; used when non-empty.
  std::vector<double> epsilons;
  // Otherwise eps = fraction * scale, where scale is the largest
  // orthogonal gap 4 Tr(W)/(d k) for cases i/ii and DegenerateEpsilon for
  // cases iii/iv.
  std::vector<double> epsilon_fractions = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  PenaltySchedule schedule;
  // Replace eps by a secret eps' ~ Uniform[0, eps] per cell.
  bool secret_epsilon = false;
  // Case ii only: disclose W_pas R with R drawn from {I, -I}.
  bool random_sign = false;
};

struct ExperimentConfig {
  std::string name = "dataset";
  DatasetRef dataset;
  SplitSpec split;
  TrainConfig train;
  std::vector<Index> d_values = {1};
  // Subset of {"half", "ls_exact", "halfstar_exact", "am", "ram"}.
  std::vector<std::string> methods = {"half", "am"};
  RamSettings ram;
  PpsSettings pps;
  std::uint64_t seed = 0;
  // 0 means all d_t windows.
  Index max_windows = 0;
  // Explicit window starts override max_windows.
  std::vector<Index> window_starts;
  // Also emit one row per window, not only the window average.
  bool per_window_rows = false;
  int threads = 1;
};

ExperimentConfig ExperimentConfigFromJson(const std::string& json_text);
std::string ExperimentConfigToJson(const ExperimentConfig& cfg);

// A normalized dataset plus its split. Categorical columns are encoded from
// training rows only.
struct PreparedData {
  Dataset data;
  Split split;
};

PreparedData PrepareData(const ExperimentConfig& cfg);

// Window starts the grid visits for a given d.
std::vector<Index> GridWindowStarts(const ExperimentConfig& cfg, Index d_t);

// The jointly trained model shared by all cells of an experiment.
LRParams TrainVflModel(const ExperimentConfig& cfg, const PreparedData& prep);

// MSE of one (d, window, method) cell. Training seeds depend only on
// (cfg.seed, d, window_start), so a cell replays identically in isolation.
double RunAttackCell(const ExperimentConfig& cfg, const PreparedData& prep,
                     const LRParams& vfl, Index d, Index window_start,
                     const std::string& method);

// Whether `method` can run for (d, k); fills `reason` when it cannot.
bool MethodApplies(const std::string& method, Index d, int k,
                   std::string* reason);

struct AttackGridResult {
  std::vector<AttackRecord> rows;
  std::vector<std::string> notes;  // skipped cells and why
};

AttackGridResult RunAttackGrid(const ExperimentConfig& cfg);
std::string AttackGridCsv(const AttackGridResult& result);

struct PiRecord {
  std::string dataset;
  std::string pps_case;
  Index d = 0;
  Index window_start = 0;
  double epsilon = 0.0;
  double g_achieved = 0.0;
  double mse_predicted = 0.0;
  double mse_empirical = 0.0;
  std::string status;
};

struct PiGridResult {
  std::vector<PiRecord> rows;
  std::vector<std::string> notes;
};

// Exact-score attack against a disclosed W_n over the given rows, without
// clipping; half* when `half_star`, else least squares.
double SimulateDistortedAttack(const LRParams& vfl, const Partition& partition,
                               const Matrix& W_n, const Matrix& features,
                               bool half_star);

PiGridResult RunPiGrid(const ExperimentConfig& cfg);
std::string PiCsvHeader();
std::string PiGridCsv(const PiGridResult& result);

// K = E[(X - mu)(X - mu)^T] over all rows (1/n normalization).
Matrix Covariance(const Matrix& features);
std::string MatrixCsv(const Matrix& m);

struct AccuracyRecord {
  std::string dataset;
  Index active_features = 0;
  Index d = 0;
  double accuracy = 0.0;
};

// Window-averaged AM test accuracy per d, plus the full-feature model.
std::vector<AccuracyRecord> RunAmAccuracy(const ExperimentConfig& cfg);
std::string AccuracyCsv(const std::vector<AccuracyRecord>& rows);

}  // namespace vflpi

#endif  // VFLPI_HARNESS_H_
