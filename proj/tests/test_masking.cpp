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

#include <algorithm>
#include <cmath>
#include <queue>
#include <set>

#include "doctest.h"
#include "fisher/masking.hpp"

using namespace fisher;

namespace {

bool inside(const Rect& r, int i, int j) {
  return i >= r.top && i < r.top + r.rows && j >= r.left && j < r.left + r.cols;
}

// 4-connected components of the kept set.
int kept_components(const MaskPlan& p) {
  const int R = p.dims.rows, C = p.dims.cols;
  std::vector<int> label(p.keep.size(), -1);
  int n = 0;
  for (int s = 0; s < R * C; ++s) {
    if (!p.keep[s] || label[s] >= 0) continue;
    std::queue<int> q;
    q.push(s);
    label[s] = n;
    while (!q.empty()) {
      const int c = q.front();
      q.pop();
      const int i = c / C, j = c % C;
      const int nb[4][2] = {{i - 1, j}, {i + 1, j}, {i, j - 1}, {i, j + 1}};
      for (auto& v : nb) {
        if (v[0] < 0 || v[0] >= R || v[1] < 0 || v[1] >= C) continue;
        const int k = v[0] * C + v[1];
        if (p.keep[k] && label[k] < 0) {
          label[k] = n;
          q.push(k);
        }
      }
    }
    ++n;
  }
  return n;
}

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

SubBandBatch bands_of(int count, int frames = 64, int width = 100) {
  SubBandBatch b;
  for (int i = 0; i < count; ++i) {
    b.slices.push_back(MatD::Constant(frames, width, i));
    b.origin.push_back({i / 2, i % 2});
  }
  return b;
}

}  // namespace

TEST_CASE("patchify grid sizes") {
  CHECK(patchify(MatD::Zero(998, 100), 16).dims.count() == 372);
  CHECK(patchify(MatD::Zero(998, 100), 16).dims == GridDims{62, 6});
  CHECK(patchify(MatD::Zero(998, 50), 16).dims.count() == 186);
  CHECK_THROWS_AS(patchify(MatD::Zero(15, 100), 16), DataError);
  CHECK_THROWS_AS(patchify(MatD::Zero(100, 15), 16), DataError);
}

TEST_CASE("patchify exact fit returns the top-left block") {
  MatD band = MatD::Random(16, 16);
  const PatchGrid g = patchify(band, 16);
  REQUIRE(g.patches.rows() == 1);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) CHECK(g.patches(0, i * 16 + j) == band(i, j));
}

TEST_CASE("patchify raster order and truncation") {
  MatD band(37, 23);
  for (int i = 0; i < 37; ++i)
    for (int j = 0; j < 23; ++j) band(i, j) = i * 1000 + j;
  const PatchGrid g = patchify(band, 4);
  CHECK(g.dims == GridDims{9, 5});
  for (int r = 0; r < 9; ++r)
    for (int c = 0; c < 5; ++c)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) CHECK(g.patches(r * 5 + c, i * 4 + j) == band(r * 4 + i, c * 4 + j));
}

TEST_CASE("mask count examples") {
  const MaskPlan p = make_inverse_block_mask({62, 6}, 0.8, 7);
  CHECK(p.masked_count == 298);
  CHECK(p.kept_count() == 74);
  CHECK(std::count(p.keep.begin(), p.keep.end(), 1) == 74);
  const MaskPlan q = make_inverse_block_mask({2, 2}, 0.5, 7);
  CHECK(std::count(q.keep.begin(), q.keep.end(), 0) == 2);
}

TEST_CASE("mask is deterministic and seed-sensitive") {
  const MaskPlan a = make_inverse_block_mask({62, 6}, 0.8, 11);
  const MaskPlan b = make_inverse_block_mask({62, 6}, 0.8, 11);
  CHECK(a.keep == b.keep);
  int differing = 0;
  for (std::uint64_t s = 0; s < 20; ++s) differing += make_inverse_block_mask({62, 6}, 0.8, s).keep != a.keep;
  CHECK(differing >= 15);
}

TEST_CASE("mask errors") {
  CHECK_THROWS_AS(make_inverse_block_mask({1, 1}, 0.5, 0), UsageError);
  CHECK_THROWS_AS(make_inverse_block_mask({4, 4}, 0.0, 0), UsageError);
  CHECK_THROWS_AS(make_inverse_block_mask({4, 4}, 1.0, 0), UsageError);
}

TEST_CASE("mask property sweep over grids and ratios") {
  int grids = 0;
  for (int cols : {1, 2, 3, 4, 6, 8, 13}) {
    for (int rows = 1; rows * cols <= 2048; rows += (rows < 40 ? 1 : 17)) {
      const int P = rows * cols;
      if (P < 4) continue;
      ++grids;
      for (double ratio : {0.5, 0.75, 0.8, 0.9}) {
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
          CAPTURE(rows);
          CAPTURE(cols);
          CAPTURE(ratio);
          const MaskPlan p = make_inverse_block_mask({rows, cols}, ratio, seed);
          const int expected = round_half_up(ratio * P);
          // Forced into [1, P-1] so both sides stay non-empty.
          CHECK(p.masked_count == std::clamp(expected, 1, P - 1));
          if (expected <= P - 1) CHECK(p.masked_count == expected);
          const int kept = static_cast<int>(std::count(p.keep.begin(), p.keep.end(), 1));
          const int masked = static_cast<int>(std::count(p.keep.begin(), p.keep.end(), 0));
          CHECK(kept + masked == P);
          CHECK(masked == p.masked_count);
          CHECK(kept >= 1);
          CHECK(masked >= 1);
          // Kept set = one block plus a boundary strip, connected.
          CHECK(p.block.area() >= 1);
          CHECK(p.strip.area() <= p.block.perimeter());
          CHECK(p.block.area() + p.strip.area() == kept);
          CHECK(kept_components(p) == 1);
          bool union_matches = true;
          for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
              union_matches &= static_cast<bool>(p.keep[i * cols + j]) == (inside(p.block, i, j) || inside(p.strip, i, j));
          CHECK(union_matches);
        }
      }
    }
  }
  CHECK(grids >= 200);
}

TEST_CASE("clone counts without capping") {
  const ClonedBatch out = clone_with_masks(bands_of(8), 4, 64, 0.8, 16, 3);
  CHECK(out.plans.size() == 32);
  CHECK(out.bands.size() == 32);
  const ClonedBatch uncapped = clone_with_masks(bands_of(40), 4, 0, 0.8, 16, 3);
  CHECK(uncapped.plans.size() == 160);
}

TEST_CASE("clone cap binds uniformly") {
  const ClonedBatch out = clone_with_masks(bands_of(40), 4, 64, 0.8, 16, 3);
  CHECK(out.plans.size() == 64);
  std::vector<int> per(40, 0);
  for (const auto& p : out.plans) ++per[p.source_slice];
  CHECK(*std::max_element(per.begin(), per.end()) - *std::min_element(per.begin(), per.end()) <= 1);
  CHECK(*std::min_element(per.begin(), per.end()) >= 1);
  for (int s = 0; s < 40; ++s) CHECK(per[s] <= 4);
  for (int slices : {1, 7, 33, 64}) {
    for (int clones : {1, 2, 5}) {
      for (int cap : {64, 100, 128}) {
        if (cap < slices) continue;
        const auto counts = clone_counts(slices, clones, cap, 9);
        int total = 0;
        for (int c : counts) total += c;
        CHECK(total <= cap);
        CHECK(total == std::min(cap, slices * clones));
      }
    }
  }
}

TEST_CASE("clone bookkeeping and seeds") {
  const SubBandBatch in = bands_of(5);
  const ClonedBatch out = clone_with_masks(in, 3, 64, 0.8, 16, 21);
  REQUIRE(out.plans.size() == 15);
  std::set<std::uint64_t> seeds;
  for (std::size_t j = 0; j < out.plans.size(); ++j) {
    const MaskPlan& p = out.plans[j];
    seeds.insert(p.seed);
    CHECK(out.bands.slices[j] == in.slices[p.source_slice]);
    CHECK(out.bands.origin[j].item == in.origin[p.source_slice].item);
    CHECK(out.bands.origin[j].band == in.origin[p.source_slice].band);
    CHECK(p.clone_id == static_cast<int>(j % 3));
  }
  CHECK(seeds.size() == 15);

  const ClonedBatch one = clone_with_masks(bands_of(1), 1, 64, 0.8, 16, 0);
  REQUIRE(one.plans.size() == 1);
  CHECK(one.bands.slices[0] == bands_of(1).slices[0]);
}

TEST_CASE("clone cap below distinct band count is an error") {
  CHECK_THROWS_AS(clone_with_masks(bands_of(10), 2, 8, 0.8, 16, 0), UsageError);
  CHECK_THROWS_AS(clone_with_masks(bands_of(3), 0, 8, 0.8, 16, 0), UsageError);
}

TEST_CASE("student input assembly") {
  const PatchGrid grid = patchify(MatD::Random(998, 100), 16);
  const StudentInput all = assemble_student_input(grid, full_visibility_plan(grid.dims));
  REQUIRE(all.visible() == 372);
  for (int i = 0; i < 372; ++i) CHECK(all.positions[i] == i);
  CHECK(all.patches == grid.patches);

  const MaskPlan plan = make_inverse_block_mask(grid.dims, 0.8, 5);
  const StudentInput in = assemble_student_input(grid, plan);
  CHECK(in.visible() == 74);
  CHECK(in.length() == 75);
  CHECK(std::is_sorted(in.positions.begin(), in.positions.end()));
  CHECK(std::adjacent_find(in.positions.begin(), in.positions.end()) == in.positions.end());
  for (std::size_t k = 0; k < in.positions.size(); ++k) {
    CHECK(plan.keep[in.positions[k]] == 1);
    CHECK(in.patches.row(k) == grid.patches.row(in.positions[k]));
  }

  MaskPlan wrong = plan;
  wrong.dims = {61, 6};
  CHECK_THROWS_AS(assemble_student_input(grid, wrong), UsageError);
}
