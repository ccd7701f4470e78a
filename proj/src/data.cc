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

#include "vflpi/data.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>

namespace vflpi {
namespace {

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

// Splits one line. Double quotes group fields and "" escapes a quote.
std::vector<std::string> SplitLine(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  if (delimiter == ' ') {
    std::string cur;
    bool in_field = false;
    for (char ch : line) {
      if (ch == ' ' || ch == '\t' || ch == '\r') {
        if (in_field) fields.push_back(cur), cur.clear(), in_field = false;
      } else {
        cur.push_back(ch);
        in_field = true;
      }
    }
    if (in_field) fields.push_back(cur);
    return fields;
  }
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delimiter) {
      fields.push_back(Trim(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(Trim(cur));
  return fields;
}

bool ParseDouble(const std::string& s, double* out) {
  if (s.empty()) return false;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last && std::isfinite(*out);
}

bool IsBlank(const std::string& line) {
  return std::all_of(line.begin(), line.end(), [](char c) {
    return std::isspace(static_cast<unsigned char>(c));
  });
}

std::vector<ColumnSpec> Numeric(const std::vector<std::string>& names) {
  std::vector<ColumnSpec> out;
  for (const auto& n : names) out.push_back({n, ColumnKind::kNumeric});
  return out;
}

}  // namespace

CsvSchema PresetSchema(std::string_view name) {
  using K = ColumnKind;
  CsvSchema s;
  if (name == "bank") {
    // bank-additional-full.csv; "duration" (the 11th feature) is dropped.
    s.delimiter = ';';
    s.columns = {{"age", K::kNumeric},        {"job", K::kCategorical},
                 {"marital", K::kCategorical}, {"education", K::kCategorical},
                 {"default", K::kCategorical}, {"housing", K::kCategorical},
                 {"loan", K::kCategorical},    {"contact", K::kCategorical},
                 {"month", K::kCategorical},   {"day_of_week", K::kCategorical},
                 {"duration", K::kIgnore},     {"campaign", K::kNumeric},
                 {"pdays", K::kNumeric},       {"previous", K::kNumeric},
                 {"poutcome", K::kCategorical}, {"emp.var.rate", K::kNumeric},
                 {"cons.price.idx", K::kNumeric}, {"cons.conf.idx", K::kNumeric},
                 {"euribor3m", K::kNumeric},   {"nr.employed", K::kNumeric},
                 {"y", K::kLabel}};
  } else if (name == "adult") {
    // adult.data + adult.test concatenated under a header; fnlwgt (a census
    // sampling weight) is dropped.
    s.strip_label_period = true;
    s.columns = {{"age", K::kNumeric},
                 {"workclass", K::kCategorical},
                 {"fnlwgt", K::kIgnore},
                 {"education", K::kCategorical},
                 {"education-num", K::kNumeric},
                 {"marital-status", K::kCategorical},
                 {"occupation", K::kCategorical},
                 {"relationship", K::kCategorical},
                 {"race", K::kCategorical},
                 {"sex", K::kCategorical},
                 {"capital-gain", K::kNumeric},
                 {"capital-loss", K::kNumeric},
                 {"hours-per-week", K::kNumeric},
                 {"native-country", K::kCategorical},
                 {"income", K::kLabel}};
  } else if (name == "satellite") {
    // sat.trn + sat.tst, whitespace separated, under a header.
    s.delimiter = ' ';
    std::vector<std::string> names;
    for (int i = 1; i <= 36; ++i) names.push_back("a" + std::to_string(i));
    s.columns = Numeric(names);
    s.columns.push_back({"class", K::kLabel});
  } else if (name == "pendigits") {
    std::vector<std::string> names;
    for (int i = 1; i <= 16; ++i) names.push_back("a" + std::to_string(i));
    s.columns = Numeric(names);
    s.columns.push_back({"class", K::kLabel});
  } else if (name == "grid") {
    s.columns = Numeric({"tau1", "tau2", "tau3", "tau4", "p1", "p2", "p3",
                         "p4", "g1", "g2", "g3", "g4", "stab"});
    s.columns.push_back({"stabf", K::kLabel});
  } else {
    throw InvalidArgument("unknown dataset preset '" + std::string(name) + "'");
  }
  return s;
}

std::vector<std::string> PresetNames() {
  return {"bank", "adult", "satellite", "pendigits", "grid"};
}

RawDataset ParseCsv(std::istream& in, const CsvSchema& schema) {
  const std::size_t ncols = schema.columns.size();
  std::size_t label_col = ncols;
  for (std::size_t j = 0; j < ncols; ++j) {
    if (schema.columns[j].kind == ColumnKind::kLabel) {
      Require(label_col == ncols, "schema has more than one label column");
      label_col = j;
    }
  }
  Require(label_col < ncols, "schema has no label column");

  std::string line;
  while (std::getline(in, line) && IsBlank(line)) {
  }
  if (!in && line.empty()) throw InvalidArgument("CSV input is empty");
  auto header = SplitLine(line, schema.delimiter);
  if (header.size() != ncols) {
    throw InvalidArgument("header has " + std::to_string(header.size()) +
                          " columns, schema expects " + std::to_string(ncols));
  }

  RawDataset raw;
  std::vector<std::size_t> feature_cols;
  for (std::size_t j = 0; j < ncols; ++j) {
    const auto& spec = schema.columns[j];
    if (spec.kind != ColumnKind::kNumeric &&
        spec.kind != ColumnKind::kCategorical) {
      continue;
    }
    RawColumn col;
    col.name = spec.name.empty() ? header[j] : spec.name;
    col.categorical = spec.kind == ColumnKind::kCategorical;
    raw.columns.push_back(std::move(col));
    feature_cols.push_back(j);
  }

  std::vector<std::string> label_text;
  std::size_t row = 0;
  for (; std::getline(in, line); ++row) {
    if (IsBlank(line)) continue;
    auto fields = SplitLine(line, schema.delimiter);
    if (fields.size() != ncols) {
      throw ParseError(row, "expected " + std::to_string(ncols) +
                                " fields, found " +
                                std::to_string(fields.size()));
    }
    for (std::size_t f = 0; f < feature_cols.size(); ++f) {
      const std::string& text = fields[feature_cols[f]];
      RawColumn& col = raw.columns[f];
      if (col.categorical) {
        col.symbols.push_back(text);
      } else {
        double v;
        if (!ParseDouble(text, &v)) {
          throw ParseError(row, "column '" + col.name +
                                    "' is not numeric: '" + text + "'");
        }
        col.numeric.push_back(v);
      }
    }
    std::string label = fields[label_col];
    if (schema.strip_label_period && !label.empty() && label.back() == '.') {
      label.pop_back();
    }
    if (label.empty()) throw ParseError(row, "empty label");
    label_text.push_back(std::move(label));
  }
  Require(!label_text.empty(), "CSV has a header but no data rows");

  // Numeric labels sort numerically, everything else lexicographically.
  std::set<std::string> distinct(label_text.begin(), label_text.end());
  std::vector<std::string> classes(distinct.begin(), distinct.end());
  bool all_numeric = std::all_of(classes.begin(), classes.end(),
                                 [](const std::string& s) {
                                   double v;
                                   return ParseDouble(s, &v);
                                 });
  if (all_numeric) {
    std::sort(classes.begin(), classes.end(),
              [](const std::string& a, const std::string& b) {
                double x, y;
                ParseDouble(a, &x);
                ParseDouble(b, &y);
                return x < y;
              });
  }
  std::map<std::string, int> index;
  for (std::size_t c = 0; c < classes.size(); ++c) {
    index[classes[c]] = static_cast<int>(c);
  }
  raw.labels.reserve(label_text.size());
  for (const auto& t : label_text) raw.labels.push_back(index.at(t));
  raw.class_names = std::move(classes);
  return raw;
}

RawDataset LoadCsv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open '" + path + "'");
  return ParseCsv(in, schema);
}

Dataset Dataset::Subset(const std::vector<Index>& rows) const {
  Dataset out;
  out.features = SelectRows(features, rows);
  out.labels.reserve(rows.size());
  for (Index r : rows) out.labels.push_back(labels[r]);
  out.feature_names = feature_names;
  out.k = k;
  return out;
}

CategoricalEncoder::CategoricalEncoder(const RawDataset& raw,
                                       const std::vector<bool>& train_mask,
                                       CategoricalEncoding encoding) {
  const Index n = raw.rows();
  const int k = raw.num_classes();
  Require(static_cast<Index>(train_mask.size()) == n,
          "train_mask length does not match the dataset");
  std::vector<double> class_count(k, 0.0);
  double n_train = 0;
  for (Index i = 0; i < n; ++i) {
    if (!train_mask[i]) continue;
    class_count[raw.labels[i]] += 1;
    n_train += 1;
  }
  for (int c = 0; c < k; ++c) {
    Require(class_count[c] > 0, "class " + raw.class_names[c] +
                                    " has no training rows");
  }

  tables_.resize(raw.columns.size());
  fallback_.assign(raw.columns.size(), 0.0);
  for (const auto& col : raw.columns) names_.push_back(col.name);

  for (std::size_t j = 0; j < raw.columns.size(); ++j) {
    const RawColumn& col = raw.columns[j];
    if (!col.categorical) continue;
    // counts[v][c] = training rows of class c whose value is v.
    std::map<std::string, std::vector<double>> counts;
    for (Index i = 0; i < n; ++i) {
      if (!train_mask[i]) continue;
      auto& row = counts[col.symbols[i]];
      if (row.empty()) row.assign(k, 0.0);
      row[raw.labels[i]] += 1;
    }
    auto& table = tables_[j];
    for (const auto& [symbol, per_class] : counts) {
      double value = 0;
      if (encoding == CategoricalEncoding::kTargetMean) {
        double total = 0, weighted = 0;
        for (int c = 0; c < k; ++c) {
          total += per_class[c];
          weighted += c * per_class[c];
        }
        value = k > 1 ? weighted / total / (k - 1) : 0.0;
      } else {
        for (int c = 0; c < k; ++c) {
          value += (class_count[c] / n_train) * (per_class[c] / class_count[c]);
        }
      }
      table[symbol] = value;
    }
    double sum = 0;
    for (Index i = 0; i < n; ++i) {
      if (train_mask[i]) sum += table.at(col.symbols[i]);
    }
    fallback_[j] = sum / n_train;
  }
}

double CategoricalEncoder::Encode(std::size_t column,
                                  const std::string& symbol) const {
  const auto& table = tables_.at(column);
  auto it = table.find(symbol);
  return it == table.end() ? fallback_[column] : it->second;
}

double CategoricalEncoder::EncodeStrict(std::size_t column,
                                        const std::string& symbol) const {
  const auto& table = tables_.at(column);
  auto it = table.find(symbol);
  if (it == table.end()) {
    throw InvalidArgument("unknown category '" + symbol + "' in column '" +
                          names_.at(column) + "'");
  }
  return it->second;
}

const std::map<std::string, double>& CategoricalEncoder::Table(
    std::size_t column) const {
  return tables_.at(column);
}

double CategoricalEncoder::Fallback(std::size_t column) const {
  return fallback_.at(column);
}

Dataset EncodeCategorical(const RawDataset& raw,
                          const std::vector<bool>& train_mask,
                          CategoricalEncoding encoding) {
  CategoricalEncoder encoder(raw, train_mask, encoding);
  Dataset ds;
  const Index n = raw.rows();
  ds.features.resize(n, static_cast<Index>(raw.columns.size()));
  for (std::size_t j = 0; j < raw.columns.size(); ++j) {
    const RawColumn& col = raw.columns[j];
    ds.feature_names.push_back(col.name);
    for (Index i = 0; i < n; ++i) {
      ds.features(i, j) =
          col.categorical ? encoder.Encode(j, col.symbols[i]) : col.numeric[i];
    }
  }
  ds.labels = raw.labels;
  ds.k = raw.num_classes();
  return ds;
}

Dataset Normalize(const Dataset& ds) {
  Dataset out = ds;
  for (Index j = 0; j < out.features.cols(); ++j) {
    auto col = out.features.col(j);
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    if (hi > lo) {
      col = ((col.array() - lo) / (hi - lo)).matrix();
      // Guard against 1 + ulp after the division.
      col = col.cwiseMax(0.0).cwiseMin(1.0);
    } else {
      col.setZero();
    }
  }
  return out;
}

Split SplitDataset(const Dataset& ds, const SplitSpec& spec) {
  Require(spec.prediction_fraction > 0 && spec.prediction_fraction < 1,
          "prediction_fraction must lie in (0,1)");
  Require(spec.test_fraction_of_train > 0 && spec.test_fraction_of_train < 1,
          "test_fraction_of_train must lie in (0,1)");
  const Index n = ds.rows();
  const Index n_pred =
      static_cast<Index>(std::llround(spec.prediction_fraction * n));
  const Index n_rest = n - n_pred;
  const Index n_test =
      static_cast<Index>(std::llround(spec.test_fraction_of_train * n_rest));
  const Index n_train = n_rest - n_test;
  Require(n_pred > 0 && n_test > 0 && n_train > 0,
          "dataset of " + std::to_string(n) + " rows is too small to split");

  std::vector<Index> perm(n);
  std::iota(perm.begin(), perm.end(), Index{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(perm.begin(), perm.end(), rng);

  Split split;
  split.prediction.assign(perm.begin(), perm.begin() + n_pred);
  split.test.assign(perm.begin() + n_pred, perm.begin() + n_pred + n_test);
  split.train.assign(perm.begin() + n_pred + n_test, perm.end());

  std::vector<bool> seen(ds.k, false);
  for (Index r : split.train) seen[ds.labels[r]] = true;
  for (int c = 0; c < ds.k; ++c) {
    if (!seen[c]) {
      throw InvalidArgument("class " + std::to_string(c) +
                            " is missing from the training split; re-seed");
    }
  }
  return split;
}

std::vector<bool> MaskOf(const std::vector<Index>& rows, Index n) {
  std::vector<bool> mask(n, false);
  for (Index r : rows) mask.at(r) = true;
  return mask;
}

Partition WindowPartition(Index d_t, Index d, Index start) {
  Require(d >= 1 && d < d_t, "window size must satisfy 1 <= d < d_t (d=" +
                                 std::to_string(d) +
                                 ", d_t=" + std::to_string(d_t) + ")");
  Require(start >= 0 && start < d_t, "window start out of range");
  Partition p;
  std::vector<bool> passive(d_t, false);
  for (Index i = 0; i < d; ++i) {
    Index f = (start + i) % d_t;
    p.passive.push_back(f);
    passive[f] = true;
  }
  for (Index f = 0; f < d_t; ++f) {
    if (!passive[f]) p.active.push_back(f);
  }
  return p;
}

std::vector<Partition> WindowPartitions(Index d_t, Index d) {
  std::vector<Partition> out;
  out.reserve(d_t);
  for (Index s = 0; s < d_t; ++s) out.push_back(WindowPartition(d_t, d, s));
  return out;
}

}  // namespace vflpi
