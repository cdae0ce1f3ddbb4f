// Copyright 2026 The impgcn Authors.
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

#ifndef IMPGCN_COMMON_HPP_
#define IMPGCN_COMMON_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace impgcn {

using NodeId = std::int32_t;
using EdgeOffset = std::int64_t;

// Row-major so that one embedding is one contiguous row.
template <typename Real>
using Table = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Real>
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

using Rng = std::mt19937_64;

/// Fills `table` with U(-bound, bound), bound = sqrt(6 / (fan_in + fan_out)).
template <typename Real>
void xavier_uniform(Table<Real>& table, double fan_in, double fan_out,
                    Rng& rng) {
  const double bound = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index r = 0; r < table.rows(); ++r) {
    for (Eigen::Index c = 0; c < table.cols(); ++c) {
      table(r, c) = static_cast<Real>(dist(rng));
    }
  }
}

// Error categories map one-to-one onto the CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad arguments or configuration.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Malformed, inconsistent or missing input data.
class DataError : public Error {
 public:
  using Error::Error;
};

// Non-finite values, divergence.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Runs fn(begin, end) over contiguous blocks of [0, count). Every index is
// visited by exactly one call, so a body that writes only rows it owns gives
// the same result for any thread count.
void parallel_for(std::int64_t count, int threads,
                  const std::function<void(std::int64_t, std::int64_t)>& fn);

}  // namespace impgcn

#endif  // IMPGCN_COMMON_HPP_
