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

#ifndef FISHER_MASKING_HPP_
#define FISHER_MASKING_HPP_

#include <cstdint>
#include <vector>

#include "fisher/signal.hpp"

namespace fisher {

struct GridDims {
  int rows = 0;
  int cols = 0;

  int count() const { return rows * cols; }
  friend bool operator==(const GridDims&, const GridDims&) = default;
};

/// Non-overlapping p x p patches of a sub-band in raster order. Row r of the
/// grid covers frames [r p, (r+1) p), column c covers bins [c p, (c+1) p).
/// Each patch is flattened frame-major into one row of `patches`.
struct PatchGrid {
  MatD patches;
  GridDims dims;
  int patch = 0;
};

struct Rect {
  int top = 0;
  int left = 0;
  int rows = 0;
  int cols = 0;

  int area() const { return rows * cols; }
  int perimeter() const { return 2 * (rows + cols); }
};

struct MaskPlan {
  std::vector<std::uint8_t> keep;  // 1 = visible to the student
  GridDims dims;
  int masked_count = 0;
  int clone_id = 0;
  int source_slice = 0;
  std::uint64_t seed = 0;
  Rect block;  // sampled keep-block before boundary adjustment
  Rect strip;  // boundary adjustment cells (area may be 0)

  int kept_count() const { return dims.count() - masked_count; }
};

/// Visible patches fed to the student; slot 0 of the encoder sequence is the
/// [CLS] token, so length() == visible patches + 1.
struct StudentInput {
  MatD patches;
  std::vector<int> positions;  // raster index in the grid, strictly increasing
  GridDims dims;

  Eigen::Index visible() const { return patches.rows(); }
  Eigen::Index length() const { return patches.rows() + 1; }
};

struct ClonedBatch {
  SubBandBatch bands;
  std::vector<MaskPlan> plans;
};

GridDims patch_grid_dims(Eigen::Index frames, Eigen::Index bins, int patch);

/// Trailing frames and bins that do not fill a whole patch are dropped.
PatchGrid patchify(const MatD& band, int patch);

/// round-half-up(ratio * P), clamped so at least one patch is kept and one
/// masked.
int masked_count_for(int patches, double ratio);

/// Samples one keep-block with aspect ratio in [0.5, 2] and tops it up with a
/// one-cell-thick strip on its boundary so exactly masked_count_for(P, ratio)
/// patches end up masked.
MaskPlan make_inverse_block_mask(GridDims dims, double ratio, std::uint64_t seed);

/// Plan with every patch visible (inference).
MaskPlan full_visibility_plan(GridDims dims);

/// Clones per source slice under the m_b cap. m_b <= 0 disables the cap.
std::vector<int> clone_counts(int slices, int clones_per_band, int max_clones, std::uint64_t seed);

/// Replicates every slice with independently seeded masks, at most m_b slices
/// in total. Output is slice-major: all clones of slice 0 first.
ClonedBatch clone_with_masks(const SubBandBatch& bands, int clones_per_band, int max_clones, double ratio,
                             int patch, std::uint64_t seed);

StudentInput assemble_student_input(const PatchGrid& grid, const MaskPlan& plan);

}  // namespace fisher

#endif  // FISHER_MASKING_HPP_
