// Copyright 2026 The radsum Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef RADSUM_EMBEDDING_HPP_
#define RADSUM_EMBEDDING_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "radsum/error.hpp"
#include "radsum/text.hpp"

namespace radsum {

// One embedding per row.
template <typename Scalar>
using EmbeddingRows = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kUnitNormTolerance = 1e-6;

// Tokens paired with one unit-norm vector per token.
template <typename Scalar>
struct BasicEmbeddingMatrix {
  TokenSeq tokens;
  EmbeddingRows<Scalar> vectors;

  Eigen::Index dimension() const { return vectors.cols(); }
};

using EmbeddingMatrix = BasicEmbeddingMatrix<double>;

// Throws unless every row of `rows` has unit L2 norm within `tolerance`.
template <typename Derived>
void RequireUnitRows(const Eigen::MatrixBase<Derived>& rows, const std::string& what,
                     double tolerance = kUnitNormTolerance) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const double norm = static_cast<double>(rows.row(i).norm());
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > tolerance) {
      throw Error(what + " vector " + std::to_string(i) + " is not unit-norm (norm " +
                  std::to_string(norm) + ")");
    }
  }
}

// Rescales rows whose norm is off by more than `tolerance`; rows already
// within tolerance are left bit-for-bit untouched. Zero rows throw.
template <typename Scalar>
void NormalizeRows(EmbeddingRows<Scalar>& rows, double tolerance = kUnitNormTolerance) {
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Scalar norm = rows.row(i).norm();
    if (!(norm > Scalar(0)) || !std::isfinite(static_cast<double>(norm))) {
      throw Error("embedding vector " + std::to_string(i) + " has zero or non-finite norm");
    }
    if (std::abs(static_cast<double>(norm) - 1.0) > tolerance) rows.row(i) /= norm;
  }
  RequireUnitRows(rows, "embedding", tolerance);
}

}  // namespace radsum

#endif  // RADSUM_EMBEDDING_HPP_
