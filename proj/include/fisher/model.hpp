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

#ifndef FISHER_MODEL_HPP_
#define FISHER_MODEL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fisher/masking.hpp"
#include "fisher/signal.hpp"

namespace fisher {

struct ModelConfig {
  int depth = 2;
  int hidden = 32;
  int heads = 2;
  int mlp_ratio = 4;
  int patch = 16;
  int decoder_depth = 2;
  int decoder_kernel = 3;
  double norm_eps = 1e-6;

  void validate() const;
  int head_dim() const { return hidden / heads; }
  int mlp_hidden() const { return hidden * mlp_ratio; }
  int patch_dim() const { return patch * patch; }
};

/// Row-vector convention: y = x W + b, W is (in x out).
template <typename Scalar>
struct LinearParams {
  Mat<Scalar> weight;
  RowVec<Scalar> bias;
};

template <typename Scalar>
struct NormParams {
  RowVec<Scalar> weight;
  RowVec<Scalar> bias;
};

/// Pre-norm transformer block: x + Attn(LN(x)), then h + MLP(LN(h)).
template <typename Scalar>
struct BlockParams {
  NormParams<Scalar> norm1;
  LinearParams<Scalar> qkv;
  LinearParams<Scalar> proj;
  NormParams<Scalar> norm2;
  LinearParams<Scalar> fc1;
  LinearParams<Scalar> fc2;
};

template <typename Scalar>
struct EncoderParams {
  LinearParams<Scalar> patch_embed;
  RowVec<Scalar> cls_token;
  std::vector<BlockParams<Scalar>> blocks;
  NormParams<Scalar> norm;
};

/// Same-padded k x k convolutions over the patch grid, stored im2col style:
/// weight is (k*k*D x D), neighbour offsets in raster order.
template <typename Scalar>
struct DecoderParams {
  std::vector<LinearParams<Scalar>> convs;
};

template <typename Scalar>
struct ModelState {
  ModelConfig config;
  EncoderParams<Scalar> student;
  DecoderParams<Scalar> decoder;
  EncoderParams<Scalar> teacher;
  std::int64_t step = 0;
};

template <typename Scalar>
struct StudentGrads {
  EncoderParams<Scalar> encoder;
  DecoderParams<Scalar> decoder;
};

// ---------------------------------------------------------------------------
// Parameter traversal. The visitor receives (name, tensor, tensor...) for
// every tensor of every argument, zipped in a fixed order; all arguments must
// share one layout.

namespace detail {

template <class F, class... L>
void visit_linear(F& f, const std::string& prefix, L&... l) {
  f(prefix + ".weight", l.weight...);
  f(prefix + ".bias", l.bias...);
}

template <class F, class... N>
void visit_norm(F& f, const std::string& prefix, N&... n) {
  f(prefix + ".weight", n.weight...);
  f(prefix + ".bias", n.bias...);
}

template <class F, class... B>
void visit_block(F& f, const std::string& p, B&... b) {
  visit_norm(f, p + ".norm1", b.norm1...);
  visit_linear(f, p + ".attn.qkv", b.qkv...);
  visit_linear(f, p + ".attn.proj", b.proj...);
  visit_norm(f, p + ".norm2", b.norm2...);
  visit_linear(f, p + ".mlp.fc1", b.fc1...);
  visit_linear(f, p + ".mlp.fc2", b.fc2...);
}

}  // namespace detail

template <class F, class E0, class... E>
void visit_encoder(F&& f, E0& e0, E&... e) {
  detail::visit_linear(f, "patch_embed", e0.patch_embed, e.patch_embed...);
  f(std::string("cls_token"), e0.cls_token, e.cls_token...);
  for (std::size_t i = 0; i < e0.blocks.size(); ++i)
    detail::visit_block(f, "blocks." + std::to_string(i), e0.blocks[i], e.blocks[i]...);
  detail::visit_norm(f, "norm", e0.norm, e.norm...);
}

template <class F, class D0, class... D>
void visit_decoder(F&& f, D0& d0, D&... d) {
  for (std::size_t i = 0; i < d0.convs.size(); ++i)
    detail::visit_linear(f, "convs." + std::to_string(i), d0.convs[i], d.convs[i]...);
}

/// Student encoder and decoder, prefixed "encoder." / "decoder.".
template <class F, class G0, class... G>
void visit_student(F&& f, G0& g0, G&... g) {
  visit_encoder([&](const std::string& n, auto&... t) { f("encoder." + n, t...); }, g0.encoder, g.encoder...);
  visit_decoder([&](const std::string& n, auto&... t) { f("decoder." + n, t...); }, g0.decoder, g.decoder...);
}

template <typename Scalar>
std::int64_t count_parameters(const EncoderParams<Scalar>& params) {
  std::int64_t n = 0;
  visit_encoder([&](const std::string&, const auto& t) { n += t.size(); }, params);
  return n;
}

template <typename Scalar>
std::int64_t count_parameters(const DecoderParams<Scalar>& params) {
  std::int64_t n = 0;
  visit_decoder([&](const std::string&, const auto& t) { n += t.size(); }, params);
  return n;
}

// ---------------------------------------------------------------------------
// Forward traces kept for the backward pass.

template <typename Scalar>
struct NormTrace {
  Mat<Scalar> xhat;
  Vec<Scalar> rstd;
};

template <typename Scalar>
struct BlockTrace {
  NormTrace<Scalar> norm1;
  Mat<Scalar> attn_in;
  Mat<Scalar> qkv;
  std::vector<Mat<Scalar>> probs;  // one L x L matrix per head
  Mat<Scalar> attn_concat;
  NormTrace<Scalar> norm2;
  Mat<Scalar> mlp_in;
  Mat<Scalar> mlp_pre;
  Mat<Scalar> mlp_act;
};

template <typename Scalar>
struct EncoderTrace {
  Mat<Scalar> patches;
  bool with_cls = true;
  std::vector<BlockTrace<Scalar>> blocks;
  NormTrace<Scalar> norm;
};

template <typename Scalar>
struct DecoderTrace {
  GridDims dims;
  std::vector<Mat<Scalar>> columns;  // im2col input of each layer
  std::vector<Mat<Scalar>> pre;      // pre-activation of each hidden layer
};

template <typename Scalar>
struct StudentEncoding {
  RowVec<Scalar> cls;   // s_band
  Mat<Scalar> visible;  // one row per visible patch, input order
};

template <typename Scalar>
struct TeacherTargets {
  RowVec<Scalar> band;  // t_band
  Mat<Scalar> patch;    // t_patch, P x D
};

/// Analytic parameter counts for the layer structure above.
std::int64_t encoder_parameter_count(const ModelConfig& config);
std::int64_t decoder_parameter_count(const ModelConfig& config);

template <typename Scalar>
ModelState<Scalar> init_params(const ModelConfig& config, std::uint64_t seed);

template <typename Scalar>
EncoderParams<Scalar> zeros_like(const EncoderParams<Scalar>& params);
template <typename Scalar>
DecoderParams<Scalar> zeros_like(const DecoderParams<Scalar>& params);
template <typename Scalar>
StudentGrads<Scalar> zero_grads(const ModelState<Scalar>& state);

/// Fixed 2-D sinusoidal encoding: the first hidden/2 dims encode the grid row,
/// the rest the column; within each half, even dims are sin and odd dims cos.
template <typename Scalar>
Mat<Scalar> positional_encoding(GridDims dims, int hidden);

/// [CLS] + visible patch embeddings through the encoder and its final norm.
/// Positions come from input.positions, so row order does not matter.
template <typename Scalar>
StudentEncoding<Scalar> encode_student(const StudentInput& input, const EncoderParams<Scalar>& params,
                                       const ModelConfig& config, EncoderTrace<Scalar>* trace = nullptr);

/// Accumulates parameter gradients into `grads`.
template <typename Scalar>
void backward_student(const EncoderTrace<Scalar>& trace, const RowVec<Scalar>& d_cls, const Mat<Scalar>& d_visible,
                      const EncoderParams<Scalar>& params, const ModelConfig& config, EncoderParams<Scalar>& grads);

/// Scatters visible embeddings onto the grid and fills masked cells with
/// standard normal samples drawn in raster order from `seed`.
template <typename Scalar>
Mat<Scalar> decoder_input(const Mat<Scalar>& visible, const std::vector<int>& positions, const MaskPlan& plan,
                          std::uint64_t seed);

/// s_patch over the full grid.
template <typename Scalar>
Mat<Scalar> decode_student(const Mat<Scalar>& visible, const std::vector<int>& positions, const MaskPlan& plan,
                           const DecoderParams<Scalar>& params, const ModelConfig& config, std::uint64_t seed,
                           DecoderTrace<Scalar>* trace = nullptr);

/// Accumulates decoder gradients and returns d(decoder input), P x D.
template <typename Scalar>
Mat<Scalar> backward_decoder(const DecoderTrace<Scalar>& trace, const Mat<Scalar>& d_out,
                             const DecoderParams<Scalar>& params, const ModelConfig& config,
                             DecoderParams<Scalar>& grads);

/// Per-row zero-mean unit-variance standardization.
template <typename Scalar>
Mat<Scalar> standardize_rows(const Mat<Scalar>& x, double eps);

/// Mean over layers of (already standardized) per-layer outputs; band target
/// is the position mean of the patch target.
template <typename Scalar>
TeacherTargets<Scalar> average_layer_targets(const std::vector<Mat<Scalar>>& layers);

/// Outputs of every encoder block over the full patch sequence (no [CLS]).
template <typename Scalar>
std::vector<Mat<Scalar>> teacher_layer_outputs(const PatchGrid& grid, const EncoderParams<Scalar>& teacher,
                                               const ModelConfig& config);

template <typename Scalar>
TeacherTargets<Scalar> encode_teacher_targets(const PatchGrid& grid, const EncoderParams<Scalar>& teacher,
                                              const ModelConfig& config);

/// teacher <- tau * teacher + (1 - tau) * student.
template <typename Scalar>
void ema_update(ModelState<Scalar>& state, double tau);

/// [CLS] output of the student for one fully visible sub-band.
template <typename Scalar>
RowVec<Scalar> embed_band(const MatD& band, const EncoderParams<Scalar>& params, const ModelConfig& config);

/// Native-rate inference: concatenated per-band [CLS] vectors, lowest band
/// first, dimension n * D.
Eigen::VectorXd embed_segment(const RawSignal& signal, const ModelState<double>& state, const StftConfig& stft);

}  // namespace fisher

#endif  // FISHER_MODEL_HPP_
