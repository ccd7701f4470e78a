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

#include "vflpi/common.h"

namespace vflpi {

ParseError::ParseError(std::size_t row, const std::string& what)
    : Error("row " + std::to_string(row) + ": " + what), row_(row) {}

RankDeficientError::RankDeficientError(Index rank, Index required)
    : Error("rank-deficient system: numerical rank " + std::to_string(rank) +
            ", need " + std::to_string(required)),
      rank_(rank),
      required_(required) {}

DivergenceError::DivergenceError(int epoch)
    : Error("training diverged (non-finite loss) at epoch " +
            std::to_string(epoch)),
      epoch_(epoch) {}

Matrix SelectRows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = m.row(rows[i]);
  return out;
}

Matrix SelectCols(const Matrix& m, const std::vector<Index>& cols) {
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) out.col(j) = m.col(cols[j]);
  return out;
}

}  // namespace vflpi
