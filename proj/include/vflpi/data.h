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

// Tabular ingestion: CSV loading, categorical encoding, min-max
// normalization, train/test/prediction splits and the cyclic feature windows
// that assign features to the passive party.

#ifndef VFLPI_DATA_H_
#define VFLPI_DATA_H_

#include <cstdint>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vflpi/common.h"

namespace vflpi {

enum class ColumnKind { kNumeric, kCategorical, kLabel, kIgnore };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
};

// Describes every column of a CSV file, in file order. Exactly one column
// must be the label.
struct CsvSchema {
  std::vector<ColumnSpec> columns;
  // ' ' means "any run of spaces or tabs".
  char delimiter = ',';
  // Drop one trailing '.' from label values (the Adult test file writes
  // ">50K." where the training file writes ">50K").
  bool strip_label_period = false;
};

// Schemas for the supported UCI files: "bank", "adult", "satellite",
// "pendigits", "grid". Throws InvalidArgument for any other name.
CsvSchema PresetSchema(std::string_view name);
std::vector<std::string> PresetNames();

struct RawColumn {
  std::string name;
  bool categorical = false;
  std::vector<double> numeric;       // filled when !categorical
  std::vector<std::string> symbols;  // filled when categorical
};

// A dataset whose categorical columns are still symbolic.
struct RawDataset {
  std::vector<RawColumn> columns;
  Labels labels;
  std::vector<std::string> class_names;

  Index rows() const { return static_cast<Index>(labels.size()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }
};

// Parses a CSV with a header row. A row with the wrong number of fields or
// an unparsable numeric value raises ParseError carrying the zero-based data
// row index.
RawDataset ParseCsv(std::istream& in, const CsvSchema& schema);
RawDataset LoadCsv(const std::string& path, const CsvSchema& schema);

struct Dataset {
  Matrix features;  // n x d_t
  Labels labels;    // values in [0, k)
  std::vector<std::string> feature_names;
  int k = 0;

  Index rows() const { return features.rows(); }
  Index dims() const { return features.cols(); }
  Dataset Subset(const std::vector<Index>& rows) const;
};

// How a category is turned into a number.
enum class CategoricalEncoding {
  // Mean class index among training rows carrying the category, scaled by
  // 1/(k-1). For two classes this is the usual P(y = 1 | category).
  kTargetMean,
  // Per-class category frequencies blended with the training class priors.
  kClassPriorBlend,
};

// Category -> value maps fitted on training rows only.
class CategoricalEncoder {
 public:
  CategoricalEncoder(const RawDataset& raw, const std::vector<bool>& train_mask,
                     CategoricalEncoding encoding);

  // Unseen categories map to the feature's mean over training rows.
  double Encode(std::size_t column, const std::string& symbol) const;
  // Same as Encode but throws InvalidArgument for an unseen category.
  double EncodeStrict(std::size_t column, const std::string& symbol) const;

  const std::map<std::string, double>& Table(std::size_t column) const;
  double Fallback(std::size_t column) const;

 private:
  std::vector<std::map<std::string, double>> tables_;
  std::vector<double> fallback_;
  std::vector<std::string> names_;
};

// Replaces every categorical column by its encoded value. `train_mask` has
// one entry per row and must select at least one row of every class.
Dataset EncodeCategorical(
    const RawDataset& raw, const std::vector<bool>& train_mask,
    CategoricalEncoding encoding = CategoricalEncoding::kTargetMean);

// Per-feature min-max scaling over all rows; constant features become 0.
Dataset Normalize(const Dataset& ds);

struct SplitSpec {
  double prediction_fraction = 0.20;
  double test_fraction_of_train = 0.20;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<Index> train;
  std::vector<Index> test;
  std::vector<Index> prediction;
};

// Seeded permutation split: round(n * prediction_fraction) rows go to
// prediction, then round(rest * test_fraction_of_train) to test, the
// remainder to train. Throws if a part is empty or a class is missing from
// train.
Split SplitDataset(const Dataset& ds, const SplitSpec& spec);
// Boolean row mask for `rows` over a dataset of `n` rows.
std::vector<bool> MaskOf(const std::vector<Index>& rows, Index n);

// Feature assignment between the parties. `passive` is a cyclic window in
// window order; `active` is the complement in ascending order.
struct Partition {
  std::vector<Index> passive;
  std::vector<Index> active;

  Index d() const { return static_cast<Index>(passive.size()); }
  Index total() const { return static_cast<Index>(passive.size() + active.size()); }
  Index start() const { return passive.empty() ? 0 : passive.front(); }
};

Partition WindowPartition(Index d_t, Index d, Index start);
// All d_t windows {i, ..., i + d - 1} mod d_t. Requires 1 <= d < d_t.
std::vector<Partition> WindowPartitions(Index d_t, Index d);

}  // namespace vflpi

#endif  // VFLPI_DATA_H_
