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

#ifndef FISHER_CHECKPOINT_HPP_
#define FISHER_CHECKPOINT_HPP_

#include <filesystem>
#include <optional>

#include "fisher/model.hpp"

namespace fisher {

/// First and second moment estimates for the student parameters.
struct OptimizerState {
  StudentGrads<double> m;
  StudentGrads<double> v;
  std::int64_t t = 0;
};

OptimizerState make_optimizer_state(const ModelState<double>& state);

struct Checkpoint {
  ModelState<double> state;
  StftConfig stft;
  std::optional<OptimizerState> optimizer;
};

// Layout (all integers little-endian):
//   8 bytes   magic "FSHRCKPT"
//   u32       format version (1)
//   u64       header length H
//   H bytes   UTF-8 JSON header: model/stft config, step, tensor table
//             [{"name", "rows", "cols", "offset"}], offsets in doubles
//   payload   IEEE-754 binary64 values, tensors back to back, row-major
// Identical state produces identical bytes.
void save_checkpoint(const std::filesystem::path& path, const ModelState<double>& state, const StftConfig& stft,
                     const OptimizerState* optimizer = nullptr);

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace fisher

#endif  // FISHER_CHECKPOINT_HPP_
