// Copyright 2026 The fisher-cpp Authors. All Rights Reserved.
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

#ifndef FISHER_COMMON_HPP_
#define FISHER_COMMON_HPP_

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace fisher {

// Token-major dense storage: one row per token / frame / position.
template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using RowVec = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatD = Mat<double>;
using RowVecD = RowVec<double>;

// Error categories map one-to-one onto CLI exit codes (1, 2, 3).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Mixes a base seed with a tuple of stream tags. Streams derived this way are
// independent of the order in which they are requested.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

// Runs fn(i) for i in [0, n) on up to `threads` workers. Workers pick indices
// in strides, so results written to per-index slots are order independent.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace fisher

#endif  // FISHER_COMMON_HPP_
