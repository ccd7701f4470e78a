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

#ifndef VFLPI_SRC_JSON_UTIL_H_
#define VFLPI_SRC_JSON_UTIL_H_

#include <string>

#include "json.hpp"
#include "vflpi/common.h"
#include "vflpi/synthetic.h"

namespace vflpi::internal {

using Json = nlohmann::json;

inline Json ParseJson(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw InvalidArgument(std::string("invalid JSON: ") + e.what());
  }
}

inline Json MatrixToJson(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline Matrix MatrixFromJson(const Json& j) {
  Require(j.is_array(), "matrix must be a list of rows");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = rows == 0 ? 0 : static_cast<Index>(j[0].size());
  Matrix m(rows, cols);
  for (Index r = 0; r < rows; ++r) {
    Require(static_cast<Index>(j[r].size()) == cols, "ragged matrix rows");
    for (Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

inline Json VectorToJson(const Vector& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

inline Vector VectorFromJson(const Json& j) {
  Require(j.is_array(), "vector must be a list");
  Vector v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

SyntheticSpec SyntheticSpecFromJsonValue(const Json& j);
Json SyntheticSpecToJsonValue(const SyntheticSpec& spec);

}  // namespace vflpi::internal

#endif  // VFLPI_SRC_JSON_UTIL_H_
