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

#ifndef VFLPI_COMMON_H_
#define VFLPI_COMMON_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vflpi {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;
using Index = Eigen::Index;
using Labels = std::vector<int>;

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed input row; `row()` is the zero-based data row (header excluded).
class ParseError : public Error {
 public:
  ParseError(std::size_t row, const std::string& what);
  std::size_t row() const { return row_; }

 private:
  std::size_t row_;
};

// A linear system whose matrix lacks the column rank an estimator needs.
class RankDeficientError : public Error {
 public:
  RankDeficientError(Index rank, Index required);
  Index rank() const { return rank_; }
  Index required() const { return required_; }

 private:
  Index rank_;
  Index required_;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  explicit DivergenceError(int epoch);
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// Throws InvalidArgument with `message` unless `condition` holds.
inline void Require(bool condition, const std::string& message) {
  if (!condition) throw InvalidArgument(message);
}

// Rows of `m` selected by `rows`, in the given order.
Matrix SelectRows(const Matrix& m, const std::vector<Index>& rows);
// Columns of `m` selected by `cols`, in the given order.
Matrix SelectCols(const Matrix& m, const std::vector<Index>& cols);

}  // namespace vflpi

#endif  // VFLPI_COMMON_H_
