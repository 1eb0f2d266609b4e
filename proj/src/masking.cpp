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

#include "fisher/masking.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace fisher {

namespace {

int uniform_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

void fill(std::vector<std::uint8_t>& keep, int cols, const Rect& r) {
  for (int i = r.top; i < r.top + r.rows; ++i)
    for (int j = r.left; j < r.left + r.cols; ++j) keep[static_cast<std::size_t>(i * cols + j)] = 1;
}

}  // namespace

GridDims patch_grid_dims(Eigen::Index frames, Eigen::Index bins, int patch) {
  if (patch < 1) throw UsageError("patch size must be positive");
  return {static_cast<int>(frames / patch), static_cast<int>(bins / patch)};
}

PatchGrid patchify(const MatD& band, int patch) {
  const GridDims dims = patch_grid_dims(band.rows(), band.cols(), patch);
  if (dims.rows < 1 || dims.cols < 1) throw DataError("sub-band smaller than one patch");
  PatchGrid grid;
  grid.dims = dims;
  grid.patch = patch;
  grid.patches.resize(dims.count(), static_cast<Eigen::Index>(patch) * patch);
  for (int r = 0; r < dims.rows; ++r) {
    for (int c = 0; c < dims.cols; ++c) {
      const auto block = band.block(r * patch, c * patch, patch, patch);
      auto row = grid.patches.row(r * dims.cols + c);
      for (int i = 0; i < patch; ++i) row.segment(i * patch, patch) = block.row(i);
    }
  }
  return grid;
}

int masked_count_for(int patches, double ratio) {
  const int raw = static_cast<int>(std::floor(ratio * patches + 0.5));
  return std::clamp(raw, 1, patches - 1);
}

MaskPlan make_inverse_block_mask(GridDims dims, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("mask ratio must lie in (0, 1)");
  const int total = dims.count();
  if (dims.rows < 1 || dims.cols < 1 || total < 2) throw UsageError("masking needs at least two patches");

  MaskPlan plan;
  plan.dims = dims;
  plan.seed = seed;
  plan.masked_count = masked_count_for(total, ratio);
  const int kept = total - plan.masked_count;
  const int R = dims.rows;
  const int C = dims.cols;

  std::mt19937_64 rng(seed);
  const double aspect = std::uniform_real_distribution<double>(0.5, 2.0)(rng);
  const int h0 = std::clamp(static_cast<int>(std::lround(std::sqrt(kept * aspect))), 1, std::min(R, kept));

  // Block of h x w cells plus a remainder strip r < side length, laid along
  // one edge of the block so the kept set stays a union of two rectangles.
  Rect block, strip;
  const bool row_strip = kept / h0 >= C;
  if (row_strip) {
    block.cols = C;
    block.rows = kept / C;
    const int r = kept - block.rows * C;
    const int box_rows = block.rows + (r > 0 ? 1 : 0);
    const int top = uniform_int(rng, 0, R - box_rows);
    const bool strip_first = r > 0 && uniform_int(rng, 0, 1) == 1;
    block.top = strip_first ? top + 1 : top;
    block.left = 0;
    if (r > 0) strip = {strip_first ? top : top + block.rows, uniform_int(rng, 0, C - r), 1, r};
  } else {
    block.rows = h0;
    block.cols = kept / h0;
    const int r = kept - block.rows * block.cols;
    const int box_cols = block.cols + (r > 0 ? 1 : 0);
    const int top = uniform_int(rng, 0, R - block.rows);
    const int left = uniform_int(rng, 0, C - box_cols);
    const bool strip_first = r > 0 && uniform_int(rng, 0, 1) == 1;
    block.top = top;
    block.left = strip_first ? left + 1 : left;
    if (r > 0) strip = {top + uniform_int(rng, 0, block.rows - r), strip_first ? left : left + block.cols, r, 1};
  }

  plan.block = block;
  plan.strip = strip;
  plan.keep.assign(static_cast<std::size_t>(total), 0);
  fill(plan.keep, C, block);
  fill(plan.keep, C, strip);
  return plan;
}

MaskPlan full_visibility_plan(GridDims dims) {
  MaskPlan plan;
  plan.dims = dims;
  plan.masked_count = 0;
  plan.keep.assign(static_cast<std::size_t>(dims.count()), 1);
  plan.block = {0, 0, dims.rows, dims.cols};
  return plan;
}

std::vector<int> clone_counts(int slices, int clones_per_band, int max_clones, std::uint64_t seed) {
  if (clones_per_band < 1) throw UsageError("clones_per_band must be at least 1");
  if (slices < 1) throw UsageError("no sub-bands to clone");
  const long long wanted = static_cast<long long>(slices) * clones_per_band;
  if (max_clones <= 0 || wanted <= max_clones) return std::vector<int>(static_cast<std::size_t>(slices), clones_per_band);
  if (max_clones < slices) throw UsageError("m_b is smaller than the number of distinct sub-bands");

  std::vector<int> counts(static_cast<std::size_t>(slices), max_clones / slices);
  const int extra = max_clones - (max_clones / slices) * slices;
  std::vector<int> order(static_cast<std::size_t>(slices));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  for (int i = 0; i < extra; ++i) ++counts[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
  return counts;
}

ClonedBatch clone_with_masks(const SubBandBatch& bands, int clones_per_band, int max_clones, double ratio,
                             int patch, std::uint64_t seed) {
  const int slices = static_cast<int>(bands.size());
  const std::vector<int> counts = clone_counts(slices, clones_per_band, max_clones, derive_seed(seed, {0xC10E}));
  ClonedBatch out;
  for (int s = 0; s < slices; ++s) {
    const MatD& band = bands.slices[static_cast<std::size_t>(s)];
    const GridDims dims = patch_grid_dims(band.rows(), band.cols(), patch);
    for (int c = 0; c < counts[static_cast<std::size_t>(s)]; ++c) {
      MaskPlan plan = make_inverse_block_mask(
          dims, ratio, derive_seed(seed, {static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(c)}));
      plan.clone_id = c;
      plan.source_slice = s;
      out.bands.slices.push_back(band);
      out.bands.origin.push_back(bands.origin[static_cast<std::size_t>(s)]);
      out.plans.push_back(std::move(plan));
    }
  }
  return out;
}

StudentInput assemble_student_input(const PatchGrid& grid, const MaskPlan& plan) {
  if (!(grid.dims == plan.dims) || plan.keep.size() != static_cast<std::size_t>(grid.dims.count()))
    throw UsageError("mask plan does not match the patch grid");
  StudentInput input;
  input.dims = grid.dims;
  for (int i = 0; i < grid.dims.count(); ++i)
    if (plan.keep[static_cast<std::size_t>(i)]) input.positions.push_back(i);
  input.patches.resize(static_cast<Eigen::Index>(input.positions.size()), grid.patches.cols());
  for (std::size_t k = 0; k < input.positions.size(); ++k)
    input.patches.row(static_cast<Eigen::Index>(k)) = grid.patches.row(input.positions[k]);
  return input;
}

}  // namespace fisher
