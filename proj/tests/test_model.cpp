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
#include <random>

#include "doctest.h"
#include "fisher/model.hpp"
#include "fisher/trainer.hpp"
#include "test_support.hpp"

using namespace fisher;

namespace {

ModelConfig tiny_check_config() {
  ModelConfig c;
  c.depth = 2;
  c.hidden = 16;
  c.heads = 2;
  c.patch = 4;
  return c;
}

template <class P>
void jitter(P& params, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  visit_encoder([&](const std::string&, auto& t) { t = t.unaryExpr([&](double v) { return v + g(rng); }); }, params);
}

// Grid 2 x 3 from an 8 x 12 band with 4 x 4 patches.
std::vector<SliceJob> gradcheck_jobs(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<SliceJob> jobs;
  for (int s = 0; s < 3; ++s) {
    MatD band(8, 12);
    for (auto& v : band.reshaped()) v = g(rng);
    SliceJob job;
    job.grid = patchify(band, 4);
    job.plan = make_inverse_block_mask(job.grid.dims, 0.5, seed + s);
    job.noise_seed = seed * 31 + s;
    jobs.push_back(std::move(job));
  }
  return jobs;
}

double rel_error(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}); }

StudentInput visible_input(int rows, int cols, int patch_dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  PatchGrid grid;
  grid.dims = {rows, cols};
  grid.patches.resize(rows * cols, patch_dim);
  for (auto& v : grid.patches.reshaped()) v = g(rng);
  return assemble_student_input(grid, full_visibility_plan(grid.dims));
}

}  // namespace

TEST_CASE("parameter count matches the closed form for the layer structure") {
  for (auto [depth, hidden, heads, patch] : std::vector<std::array<int, 4>>{{2, 32, 2, 16}, {1, 8, 1, 4}, {3, 24, 3, 8}}) {
    ModelConfig c;
    c.depth = depth;
    c.hidden = hidden;
    c.heads = heads;
    c.patch = patch;
    const std::int64_t D = hidden, p2 = patch * patch, M = c.mlp_ratio * D;
    const std::int64_t block = 2 * D + (D * 3 * D + 3 * D) + (D * D + D) + 2 * D + (D * M + M) + (M * D + D);
    const std::int64_t encoder = (p2 * D + D) + D + depth * block + 2 * D;
    const std::int64_t decoder = c.decoder_depth * (9 * D * D + D);
    const ModelState<double> s = init_params<double>(c, 1);
    CHECK(count_parameters(s.student) == encoder);
    CHECK(encoder_parameter_count(c) == encoder);
    CHECK(count_parameters(s.decoder) == decoder);
    CHECK(decoder_parameter_count(c) == decoder);
    CHECK(count_parameters(s.teacher) == encoder);
  }
}

TEST_CASE("released scale encoder sizes") {
  // tiny 5.5M, mini 10M, small 22M; the encoder is what runs at inference.
  for (auto [hidden, heads, expected] : std::vector<std::tuple<int, int, double>>{
           {192, 3, 5.5e6}, {256, 4, 10e6}, {384, 6, 22e6}}) {
    ModelConfig c;
    c.depth = 12;
    c.hidden = hidden;
    c.heads = heads;
    const double n = static_cast<double>(encoder_parameter_count(c));
    CHECK(std::abs(n - expected) / expected < 0.05);
  }
}

TEST_CASE("init is deterministic and the teacher is an exact copy") {
  const ModelConfig c;
  const auto a = init_params<double>(c, 42);
  const auto b = init_params<double>(c, 42);
  const auto other = init_params<double>(c, 43);
  bool same = true, teacher_copy = true, differs = false;
  visit_encoder([&](const std::string&, const auto& x, const auto& y, const auto& t, const auto& o) {
    same &= x == y;
    teacher_copy &= (x - t).cwiseAbs().maxCoeff() == 0.0;
    if (x.size() > 1) differs |= x != o;
  }, a.student, b.student, a.teacher, other.student);
  CHECK(same);
  CHECK(teacher_copy);
  CHECK(differs);
  CHECK(a.step == 0);
}

TEST_CASE("config validation") {
  ModelConfig c;
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), UsageError);
  c = {};
  c.depth = 0;
  CHECK_THROWS_AS(c.validate(), UsageError);
}

TEST_CASE("positional encoding") {
  const MatD pe = positional_encoding<double>({62, 6}, 32);
  CHECK(pe.rows() == 372);
  CHECK(pe.cols() == 32);
  for (int j = 0; j < 32; ++j) CHECK(pe(0, j) == (j % 2 == 0 ? 0.0 : 1.0));
  double closest = 1e9;
  for (int a = 0; a < 372; ++a)
    for (int b = a + 1; b < 372; ++b) closest = std::min(closest, (pe.row(a) - pe.row(b)).norm());
  CHECK(closest > 1e-3);
  // Row half depends only on the grid row, column half only on the column.
  CHECK(pe.row(7).head(16) == pe.row(6).head(16));
  CHECK(pe.row(7).tail(16) == pe.row(13).tail(16));
}

TEST_CASE("student output shapes") {
  ModelConfig c;
  const auto s = init_params<double>(c, 3);
  const StudentInput one = visible_input(1, 1, c.patch_dim(), 1);
  const auto e1 = encode_student(one, s.student, c);
  CHECK(e1.cls.size() == 32);
  CHECK(e1.visible.rows() == 1);
  CHECK(e1.visible.cols() == 32);

  PatchGrid grid = patchify(MatD::Random(998, 100), 16);
  const StudentInput in = assemble_student_input(grid, make_inverse_block_mask(grid.dims, 0.8, 4));
  const auto e = encode_student(in, s.student, c);
  CHECK(e.cls.size() == 32);
  CHECK(e.visible.rows() == 74);
  CHECK(e.visible.cols() == 32);
}

TEST_CASE("student is invariant to token order given positions") {
  ModelConfig c;
  const auto s = init_params<double>(c, 5);
  StudentInput in = visible_input(3, 4, c.patch_dim(), 2);
  const auto ref = encode_student(in, s.student, c);
  StudentInput swapped = in;
  swapped.patches.row(2).swap(swapped.patches.row(9));
  std::swap(swapped.positions[2], swapped.positions[9]);
  const auto out = encode_student(swapped, s.student, c);
  CHECK((out.cls - ref.cls).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((out.visible.row(2) - ref.visible.row(9)).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((out.visible.row(9) - ref.visible.row(2)).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("decoder input scatter and gaussian fill") {
  const GridDims dims{3, 4};
  MatD visible = MatD::Random(12, 8);
  std::vector<int> positions(12);
  for (int i = 0; i < 12; ++i) positions[i] = i;
  CHECK(decoder_input(visible, positions, full_visibility_plan(dims), 9) == visible);

  MaskPlan one = full_visibility_plan(dims);
  std::fill(one.keep.begin(), one.keep.end(), 0);
  one.keep[5] = 1;
  one.masked_count = 11;
  const MatD v1 = MatD::Constant(1, 8, 7.0);
  const MatD a = decoder_input(v1, {5}, one, 77);
  const MatD b = decoder_input(v1, {5}, one, 77);
  CHECK(a == b);
  CHECK(a.rows() == 12);
  CHECK(a.row(5) == v1.row(0));
  // Raster-order standard normal draws.
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g(0.0, 1.0);
  bool matches = true;
  for (int pos = 0; pos < 12; ++pos) {
    if (pos == 5) continue;
    for (int j = 0; j < 8; ++j) matches &= a(pos, j) == g(rng);
  }
  CHECK(matches);
  CHECK(decoder_input(v1, {5}, one, 78) != a);

  ModelConfig c;
  c.hidden = 8;
  c.heads = 2;
  const auto s = init_params<double>(c, 1);
  const MatD out = decode_student(v1, {5}, one, s.decoder, c, 77);
  CHECK(out.rows() == 12);
  CHECK(out.cols() == 8);
  CHECK_THROWS_AS(decoder_input(v1, {4}, one, 1), UsageError);
}

TEST_CASE("teacher target arithmetic") {
  std::vector<MatD> layers{MatD::Constant(2, 3, 0.2), MatD::Constant(2, 3, 0.4)};
  const auto t = average_layer_targets(layers);
  CHECK(t.patch(1, 2) == doctest::Approx(0.3).epsilon(1e-15));

  ModelConfig c;
  c.depth = 1;
  const auto s = init_params<double>(c, 2);
  const PatchGrid grid = patchify(MatD::Random(64, 100), 16);
  const auto raw = teacher_layer_outputs(grid, s.teacher, c);
  REQUIRE(raw.size() == 1);
  const auto targets = encode_teacher_targets(grid, s.teacher, c);
  CHECK(targets.patch == standardize_rows(raw[0], c.norm_eps));
  CHECK((targets.band - targets.patch.colwise().mean()).cwiseAbs().maxCoeff() <= 1e-7);
  CHECK(targets.patch.rows() == grid.dims.count());

  const MatD z = standardize_rows<double>(MatD::Random(5, 32), 1e-6);
  CHECK(z.rowwise().mean().cwiseAbs().maxCoeff() < 1e-12);
  CHECK(((z.array().square().rowwise().mean() - 1.0).abs() < 1e-4).all());
}

TEST_CASE("ema update arithmetic") {
  ModelConfig c;
  auto s = init_params<double>(c, 7);
  jitter(s.teacher, 3, 0.1);
  const auto before = s;
  ema_update(s, 1.0);
  bool unchanged = true;
  visit_encoder([&](const std::string&, const auto& a, const auto& b) { unchanged &= a == b; }, s.teacher,
                before.teacher);
  CHECK(unchanged);

  ema_update(s, 0.999);
  double worst = 0.0;
  visit_encoder(
      [&](const std::string&, const auto& t, const auto& t0, const auto& stu) {
        worst = std::max(worst, (t - (0.999 * t0 + 0.001 * stu)).cwiseAbs().maxCoeff());
      },
      s.teacher, before.teacher, before.student);
  CHECK(worst <= 4 * std::numeric_limits<double>::epsilon());

  ema_update(s, 0.0);
  bool copy = true;
  visit_encoder([&](const std::string&, const auto& t, const auto& stu) { copy &= t == stu; }, s.teacher, s.student);
  CHECK(copy);

  ModelState<double> scalar = init_params<double>(c, 1);
  scalar.teacher.cls_token.setOnes();
  scalar.student.cls_token.setZero();
  ema_update(scalar, 0.999);
  CHECK(scalar.teacher.cls_token[0] == 0.999);
  CHECK_THROWS_AS(ema_update(scalar, 1.5), UsageError);
  CHECK_THROWS_AS(ema_update(scalar, -0.1), UsageError);
}

TEST_CASE("embedding dimension follows the band count") {
  ModelConfig c;
  const auto s = init_params<double>(c, 11);
  const StftConfig stft;
  const RawSignal a = fisher::testing::noise(16000, 0.5, 1);
  CHECK(embed_segment(a, s, stft).size() == 64);
  CHECK(embed_segment(fisher::testing::noise(32000, 0.5, 1), s, stft).size() == 128);
  CHECK(embed_segment(a, s, stft) == embed_segment(a, s, stft));
  CHECK_THROWS_AS(embed_segment(fisher::testing::noise(6000, 0.5, 1), s, stft), DataError);
}

TEST_CASE("band embeddings are independent of other bands") {
  ModelConfig c;
  const auto s = init_params<double>(c, 11);
  const StftConfig stft;
  const auto spec = stft_logmag(fisher::testing::noise(24000, 0.5, 3), stft);
  SubBandBatch bands = split_subbands(spec, stft);
  const RowVecD ref0 = embed_band(bands.slices[0], s.student, c);
  const RowVecD ref2 = embed_band(bands.slices[2], s.student, c);
  bands.slices[1].array() += 3.0;
  CHECK(embed_band(bands.slices[0], s.student, c) == ref0);
  CHECK(embed_band(bands.slices[2], s.student, c) == ref2);
}

TEST_CASE("analytic gradient matches central differences for every student parameter") {
  const ModelConfig c = tiny_check_config();
  ModelState<double> s = init_params<double>(c, 17);
  jitter(s.student, 1, 0.05);
  s.teacher = s.student;
  jitter(s.teacher, 2, 0.2);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.05);
  visit_decoder([&](const std::string&, auto& t) { t = t.unaryExpr([&](double v) { return v + g(rng); }); },
                s.decoder);
  const std::vector<SliceJob> jobs = gradcheck_jobs(9);
  const ForwardBackward fb = forward_backward(jobs, s);
  CHECK(fb.loss.total == doctest::Approx(forward_loss(jobs, s).total).epsilon(1e-14));

  const double h = 1e-4;
  double worst = 0.0;
  std::string worst_name;
  std::int64_t checked = 0;
  StudentGrads<double> params{s.student, s.decoder};
  auto loss_at = [&](const StudentGrads<double>& p) {
    ModelState<double> probe = s;
    probe.student = p.encoder;
    probe.decoder = p.decoder;
    return forward_loss(jobs, probe).total;
  };
  visit_student(
      [&](const std::string& name, auto& p, const auto& analytic) {
        for (Eigen::Index i = 0; i < p.size(); ++i) {
          const double orig = p.data()[i];
          p.data()[i] = orig + h;
          const double up = loss_at(params);
          p.data()[i] = orig - h;
          const double down = loss_at(params);
          p.data()[i] = orig;
          const double e = rel_error(analytic.data()[i], (up - down) / (2 * h));
          if (e > worst) {
            worst = e;
            worst_name = name;
          }
          ++checked;
        }
      },
      params, fb.grads);
  CAPTURE(worst_name);
  CAPTURE(worst);
  CHECK(checked == encoder_parameter_count(c) + decoder_parameter_count(c));
  CHECK(worst < 1e-3);
}

TEST_CASE("teacher receives no gradient") {
  const ModelConfig c = tiny_check_config();
  ModelState<double> s = init_params<double>(c, 3);
  jitter(s.teacher, 4, 0.1);
  const ForwardBackward fb = forward_backward(gradcheck_jobs(2), s);
  bool zero = true;
  visit_encoder([&](const std::string&, const auto& t) { zero &= (t.array() == 0.0).all(); }, fb.teacher_grads);
  CHECK(zero);
  CHECK(count_parameters(fb.teacher_grads) == encoder_parameter_count(c));
  // The loss does depend on the teacher, so the zero is a stop-gradient.
  ModelState<double> moved = s;
  moved.teacher.blocks[0].fc1.weight(0, 0) += 0.5;
  CHECK(forward_loss(gradcheck_jobs(2), moved).total != forward_loss(gradcheck_jobs(2), s).total);
}

TEST_CASE("float and double paths agree") {
  ModelConfig c;
  const auto d = init_params<double>(c, 8);
  const auto f = init_params<float>(c, 8);
  const StudentInput in = visible_input(3, 5, c.patch_dim(), 4);
  const auto ed = encode_student(in, d.student, c);
  const auto ef = encode_student(in, f.student, c);
  CHECK((ed.cls.cast<float>() - ef.cls).cwiseAbs().maxCoeff() < 1e-4f);
}
