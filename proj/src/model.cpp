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

#include "fisher/model.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace fisher {

namespace {

template <typename S>
S gelu(S x) {
  return S(0.5) * x * (S(1) + std::erf(x / std::numbers::sqrt2_v<S>));
}

template <typename S>
S gelu_grad(S x) {
  const S cdf = S(0.5) * (S(1) + std::erf(x / std::numbers::sqrt2_v<S>));
  const S pdf = std::exp(S(-0.5) * x * x) / std::sqrt(S(2) * std::numbers::pi_v<S>);
  return cdf + x * pdf;
}

template <typename S>
Mat<S> linear(const Mat<S>& x, const LinearParams<S>& p) {
  Mat<S> y = x * p.weight;
  y.rowwise() += p.bias;
  return y;
}

// Returns dx; accumulates dW and db.
template <typename S>
Mat<S> linear_backward(const Mat<S>& x, const Mat<S>& dy, const LinearParams<S>& p, LinearParams<S>& g) {
  g.weight.noalias() += x.transpose() * dy;
  g.bias += dy.colwise().sum();
  return dy * p.weight.transpose();
}

template <typename S>
Mat<S> layer_norm(const Mat<S>& x, const NormParams<S>& p, S eps, NormTrace<S>* trace) {
  const Vec<S> mean = x.rowwise().mean();
  Mat<S> xc = x.colwise() - mean;
  const Vec<S> var = xc.array().square().rowwise().mean();
  const Vec<S> rstd = (var.array() + eps).rsqrt();
  Mat<S> xhat = xc.array().colwise() * rstd.array();
  Mat<S> y = xhat.array().rowwise() * p.weight.array();
  y.rowwise() += p.bias;
  if (trace) {
    trace->xhat = std::move(xhat);
    trace->rstd = rstd;
  }
  return y;
}

template <typename S>
Mat<S> layer_norm_backward(const NormTrace<S>& t, const Mat<S>& dy, const NormParams<S>& p, NormParams<S>& g) {
  g.weight += (dy.array() * t.xhat.array()).colwise().sum().matrix();
  g.bias += dy.colwise().sum();
  const Mat<S> dxhat = dy.array().rowwise() * p.weight.array();
  const Vec<S> m1 = dxhat.rowwise().mean();
  const Vec<S> m2 = (dxhat.array() * t.xhat.array()).rowwise().mean();
  Mat<S> dx = dxhat;
  dx.colwise() -= m1;
  dx.array() -= t.xhat.array().colwise() * m2.array();
  dx.array().colwise() *= t.rstd.array();
  return dx;
}

template <typename S>
void softmax_rows(Mat<S>& a) {
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    auto row = a.row(i);
    row.array() -= row.maxCoeff();
    row = row.array().exp().matrix();
    row /= row.sum();
  }
}

template <typename S>
Mat<S> attention(const Mat<S>& x, const BlockParams<S>& p, const ModelConfig& cfg, BlockTrace<S>* trace) {
  const Eigen::Index d = cfg.hidden;
  const Eigen::Index dh = cfg.head_dim();
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  Mat<S> qkv = linear(x, p.qkv);
  Mat<S> concat(x.rows(), d);
  if (trace) trace->probs.resize(static_cast<std::size_t>(cfg.heads));
  for (int h = 0; h < cfg.heads; ++h) {
    const auto q = qkv.middleCols(h * dh, dh);
    const auto k = qkv.middleCols(d + h * dh, dh);
    const auto v = qkv.middleCols(2 * d + h * dh, dh);
    Mat<S> a = (q * k.transpose()) * scale;
    softmax_rows(a);
    concat.middleCols(h * dh, dh).noalias() = a * v;
    if (trace) trace->probs[static_cast<std::size_t>(h)] = std::move(a);
  }
  Mat<S> out = linear(concat, p.proj);
  if (trace) {
    trace->qkv = std::move(qkv);
    trace->attn_concat = std::move(concat);
  }
  return out;
}

template <typename S>
Mat<S> attention_backward(const BlockTrace<S>& t, const Mat<S>& dy, const BlockParams<S>& p, const ModelConfig& cfg,
                          BlockParams<S>& g) {
  const Eigen::Index d = cfg.hidden;
  const Eigen::Index dh = cfg.head_dim();
  const S scale = S(1) / std::sqrt(static_cast<S>(dh));
  const Mat<S> d_concat = linear_backward(t.attn_concat, dy, p.proj, g.proj);
  Mat<S> d_qkv(t.qkv.rows(), 3 * d);
  for (int h = 0; h < cfg.heads; ++h) {
    const Mat<S>& a = t.probs[static_cast<std::size_t>(h)];
    const auto q = t.qkv.middleCols(h * dh, dh);
    const auto k = t.qkv.middleCols(d + h * dh, dh);
    const auto v = t.qkv.middleCols(2 * d + h * dh, dh);
    const auto d_o = d_concat.middleCols(h * dh, dh);
    const Mat<S> d_a = d_o * v.transpose();
    d_qkv.middleCols(2 * d + h * dh, dh).noalias() = a.transpose() * d_o;
    const Vec<S> row_dot = (d_a.array() * a.array()).rowwise().sum();
    Mat<S> d_s = a.array() * (d_a.array().colwise() - row_dot.array());
    d_s *= scale;
    d_qkv.middleCols(h * dh, dh).noalias() = d_s * k;
    d_qkv.middleCols(d + h * dh, dh).noalias() = d_s.transpose() * q;
  }
  return linear_backward(t.attn_in, d_qkv, p.qkv, g.qkv);
}

template <typename S>
Mat<S> block_forward(const Mat<S>& x, const BlockParams<S>& p, const ModelConfig& cfg, BlockTrace<S>* trace) {
  const S eps = static_cast<S>(cfg.norm_eps);
  Mat<S> a_in = layer_norm(x, p.norm1, eps, trace ? &trace->norm1 : nullptr);
  Mat<S> h = x + attention(a_in, p, cfg, trace);
  Mat<S> m_in = layer_norm(h, p.norm2, eps, trace ? &trace->norm2 : nullptr);
  Mat<S> pre = linear(m_in, p.fc1);
  Mat<S> act = pre.unaryExpr([](S v) { return gelu(v); });
  Mat<S> y = h + linear(act, p.fc2);
  if (trace) {
    trace->attn_in = std::move(a_in);
    trace->mlp_in = std::move(m_in);
    trace->mlp_pre = std::move(pre);
    trace->mlp_act = std::move(act);
  }
  return y;
}

template <typename S>
Mat<S> block_backward(const BlockTrace<S>& t, const Mat<S>& dy, const BlockParams<S>& p, const ModelConfig& cfg,
                      BlockParams<S>& g) {
  Mat<S> d_act = linear_backward(t.mlp_act, dy, p.fc2, g.fc2);
  d_act.array() *= t.mlp_pre.unaryExpr([](S v) { return gelu_grad(v); }).array();
  const Mat<S> d_min = linear_backward(t.mlp_in, d_act, p.fc1, g.fc1);
  Mat<S> dh = dy + layer_norm_backward(t.norm2, d_min, p.norm2, g.norm2);
  const Mat<S> d_ain = attention_backward(t, dh, p, cfg, g);
  return dh + layer_norm_backward(t.norm1, d_ain, p.norm1, g.norm1);
}

// Token matrix: optional [CLS] row followed by embedded patches.
template <typename S>
Mat<S> embed_tokens(const Mat<S>& patches, const std::vector<int>& positions, GridDims dims,
                    const EncoderParams<S>& p, const ModelConfig& cfg, bool with_cls) {
  const Eigen::Index offset = with_cls ? 1 : 0;
  Mat<S> x(patches.rows() + offset, cfg.hidden);
  if (with_cls) x.row(0) = p.cls_token;
  if (patches.rows() > 0) {
    const Mat<S> pe = positional_encoding<S>(dims, cfg.hidden);
    x.bottomRows(patches.rows()) = linear(patches, p.patch_embed);
    for (std::size_t i = 0; i < positions.size(); ++i)
      x.row(static_cast<Eigen::Index>(i) + offset) += pe.row(positions[i]);
  }
  return x;
}

template <typename S>
void check_finite(const Mat<S>& x, const char* where) {
  if (!x.allFinite()) throw DivergenceError(std::string("non-finite activations in ") + where);
}

template <typename S>
Mat<S> im2col(const Mat<S>& x, GridDims dims, int kernel) {
  const int half = kernel / 2;
  const Eigen::Index d = x.cols();
  Mat<S> cols = Mat<S>::Zero(dims.count(), static_cast<Eigen::Index>(kernel) * kernel * d);
  for (int r = 0; r < dims.rows; ++r) {
    for (int c = 0; c < dims.cols; ++c) {
      const int row = r * dims.cols + c;
      for (int dy = -half; dy <= half; ++dy) {
        for (int dx = -half; dx <= half; ++dx) {
          const int rr = r + dy, cc = c + dx;
          if (rr < 0 || rr >= dims.rows || cc < 0 || cc >= dims.cols) continue;
          const int blk = (dy + half) * kernel + (dx + half);
          cols.row(row).segment(blk * d, d) = x.row(rr * dims.cols + cc);
        }
      }
    }
  }
  return cols;
}

template <typename S>
Mat<S> col2im(const Mat<S>& d_cols, GridDims dims, int kernel, Eigen::Index d) {
  const int half = kernel / 2;
  Mat<S> dx = Mat<S>::Zero(dims.count(), d);
  for (int r = 0; r < dims.rows; ++r) {
    for (int c = 0; c < dims.cols; ++c) {
      const int row = r * dims.cols + c;
      for (int dy = -half; dy <= half; ++dy) {
        for (int dx_ = -half; dx_ <= half; ++dx_) {
          const int rr = r + dy, cc = c + dx_;
          if (rr < 0 || rr >= dims.rows || cc < 0 || cc >= dims.cols) continue;
          const int blk = (dy + half) * kernel + (dx_ + half);
          dx.row(rr * dims.cols + cc) += d_cols.row(row).segment(blk * d, d);
        }
      }
    }
  }
  return dx;
}

template <typename S>
void xavier(Mat<S>& w, std::mt19937_64& rng, double fan_in, double fan_out) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> u(-limit, limit);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<S>(u(rng));
}

template <typename S>
LinearParams<S> make_linear(int in, int out, std::mt19937_64& rng, double fan_in, double fan_out) {
  LinearParams<S> l;
  l.weight.resize(in, out);
  xavier(l.weight, rng, fan_in, fan_out);
  l.bias = RowVec<S>::Zero(out);
  return l;
}

template <typename S>
LinearParams<S> make_linear(int in, int out, std::mt19937_64& rng) {
  return make_linear<S>(in, out, rng, in, out);
}

template <typename S>
NormParams<S> make_norm(int d) {
  return {RowVec<S>::Ones(d), RowVec<S>::Zero(d)};
}

}  // namespace

void ModelConfig::validate() const {
  if (depth < 1) throw UsageError("model.depth must be at least 1");
  if (hidden < 2 || heads < 1 || hidden % heads != 0) throw UsageError("model.hidden must be divisible by model.heads");
  if (hidden % 2 != 0) throw UsageError("model.hidden must be even");
  if (mlp_ratio < 1) throw UsageError("model.mlp_ratio must be at least 1");
  if (patch < 1) throw UsageError("model.patch must be positive");
  if (decoder_depth < 1) throw UsageError("model.decoder_depth must be at least 1");
  if (decoder_kernel < 1 || decoder_kernel % 2 == 0) throw UsageError("model.decoder_kernel must be odd");
  if (!(norm_eps > 0.0)) throw UsageError("model.norm_eps must be positive");
}

std::int64_t encoder_parameter_count(const ModelConfig& c) {
  const std::int64_t d = c.hidden, h = c.mlp_hidden(), pd = c.patch_dim();
  const std::int64_t block = 4 * d + (d * 3 * d + 3 * d) + (d * d + d) + (d * h + h) + (h * d + d);
  return pd * d + d + d + c.depth * block + 2 * d;
}

std::int64_t decoder_parameter_count(const ModelConfig& c) {
  const std::int64_t d = c.hidden, k2 = static_cast<std::int64_t>(c.decoder_kernel) * c.decoder_kernel;
  return c.decoder_depth * (k2 * d * d + d);
}

template <typename S>
ModelState<S> init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  const int d = config.hidden;
  ModelState<S> state;
  state.config = config;
  EncoderParams<S>& e = state.student;
  e.patch_embed = make_linear<S>(config.patch_dim(), d, rng);
  e.cls_token.resize(d);
  std::normal_distribution<double> normal(0.0, 0.02);
  for (int i = 0; i < d; ++i) e.cls_token[i] = static_cast<S>(normal(rng));
  for (int b = 0; b < config.depth; ++b) {
    BlockParams<S> blk;
    blk.norm1 = make_norm<S>(d);
    blk.qkv = make_linear<S>(d, 3 * d, rng);
    blk.proj = make_linear<S>(d, d, rng);
    blk.norm2 = make_norm<S>(d);
    blk.fc1 = make_linear<S>(d, config.mlp_hidden(), rng);
    blk.fc2 = make_linear<S>(config.mlp_hidden(), d, rng);
    e.blocks.push_back(std::move(blk));
  }
  e.norm = make_norm<S>(d);
  const int k2 = config.decoder_kernel * config.decoder_kernel;
  for (int l = 0; l < config.decoder_depth; ++l)
    state.decoder.convs.push_back(make_linear<S>(k2 * d, d, rng, k2 * d, k2 * d));
  state.teacher = state.student;
  return state;
}

template <typename S>
EncoderParams<S> zeros_like(const EncoderParams<S>& params) {
  EncoderParams<S> z = params;
  visit_encoder([](const std::string&, auto& t) { t.setZero(); }, z);
  return z;
}

template <typename S>
DecoderParams<S> zeros_like(const DecoderParams<S>& params) {
  DecoderParams<S> z = params;
  visit_decoder([](const std::string&, auto& t) { t.setZero(); }, z);
  return z;
}

template <typename S>
StudentGrads<S> zero_grads(const ModelState<S>& state) {
  return {zeros_like(state.student), zeros_like(state.decoder)};
}

template <typename S>
Mat<S> positional_encoding(GridDims dims, int hidden) {
  const int half = hidden / 2;
  Mat<S> pe(dims.count(), hidden);
  auto encode = [](auto&& out, int pos, int width) {
    for (int j = 0; j < width; ++j) {
      const int i = j / 2;
      const double freq = std::pow(10000.0, -2.0 * i / width);
      const double angle = pos * freq;
      out[j] = static_cast<S>(j % 2 == 0 ? std::sin(angle) : std::cos(angle));
    }
  };
  for (int r = 0; r < dims.rows; ++r) {
    for (int c = 0; c < dims.cols; ++c) {
      auto row = pe.row(r * dims.cols + c);
      encode(row.head(half), r, half);
      encode(row.tail(hidden - half), c, hidden - half);
    }
  }
  return pe;
}

template <typename S>
StudentEncoding<S> encode_student(const StudentInput& input, const EncoderParams<S>& params,
                                  const ModelConfig& config, EncoderTrace<S>* trace) {
  if (input.visible() < 1) throw UsageError("student input has no visible patches");
  if (static_cast<std::size_t>(input.visible()) != input.positions.size())
    throw UsageError("student input positions do not match its patches");
  Mat<S> patches = input.patches.cast<S>();
  Mat<S> x = embed_tokens(patches, input.positions, input.dims, params, config, true);
  if (trace) {
    trace->with_cls = true;
    trace->blocks.assign(params.blocks.size(), {});
  }
  for (std::size_t b = 0; b < params.blocks.size(); ++b)
    x = block_forward(x, params.blocks[b], config, trace ? &trace->blocks[b] : nullptr);
  Mat<S> out = layer_norm(x, params.norm, static_cast<S>(config.norm_eps), trace ? &trace->norm : nullptr);
  check_finite(out, "student encoder");
  if (trace) trace->patches = std::move(patches);
  return {out.row(0), out.bottomRows(out.rows() - 1)};
}

template <typename S>
void backward_student(const EncoderTrace<S>& trace, const RowVec<S>& d_cls, const Mat<S>& d_visible,
                      const EncoderParams<S>& params, const ModelConfig& config, EncoderParams<S>& grads) {
  Mat<S> dy(d_visible.rows() + 1, config.hidden);
  dy.row(0) = d_cls;
  dy.bottomRows(d_visible.rows()) = d_visible;
  Mat<S> dx = layer_norm_backward(trace.norm, dy, params.norm, grads.norm);
  for (std::size_t b = params.blocks.size(); b-- > 0;)
    dx = block_backward(trace.blocks[b], dx, params.blocks[b], config, grads.blocks[b]);
  grads.cls_token += dx.row(0);
  const Mat<S> d_patches = dx.bottomRows(dx.rows() - 1);
  grads.patch_embed.weight.noalias() += trace.patches.transpose() * d_patches;
  grads.patch_embed.bias += d_patches.colwise().sum();
}

template <typename S>
Mat<S> decoder_input(const Mat<S>& visible, const std::vector<int>& positions, const MaskPlan& plan,
                     std::uint64_t seed) {
  const int total = plan.dims.count();
  if (plan.keep.size() != static_cast<std::size_t>(total) || static_cast<std::size_t>(visible.rows()) != positions.size())
    throw UsageError("mask plan does not match the encoder output");
  Mat<S> x(total, visible.cols());
  std::vector<std::uint8_t> filled(static_cast<std::size_t>(total), 0);
  for (std::size_t i = 0; i < positions.size(); ++i) {
    const int pos = positions[i];
    if (pos < 0 || pos >= total || !plan.keep[static_cast<std::size_t>(pos)])
      throw UsageError("visible position is masked in the plan");
    x.row(pos) = visible.row(static_cast<Eigen::Index>(i));
    filled[static_cast<std::size_t>(pos)] = 1;
  }
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int pos = 0; pos < total; ++pos) {
    if (filled[static_cast<std::size_t>(pos)]) continue;
    if (plan.keep[static_cast<std::size_t>(pos)]) throw UsageError("kept position missing from encoder output");
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(pos, j) = static_cast<S>(normal(rng));
  }
  return x;
}

template <typename S>
Mat<S> decode_student(const Mat<S>& visible, const std::vector<int>& positions, const MaskPlan& plan,
                      const DecoderParams<S>& params, const ModelConfig& config, std::uint64_t seed,
                      DecoderTrace<S>* trace) {
  Mat<S> x = decoder_input(visible, positions, plan, seed);
  if (trace) {
    trace->dims = plan.dims;
    trace->columns.clear();
    trace->pre.clear();
  }
  const std::size_t layers = params.convs.size();
  for (std::size_t l = 0; l < layers; ++l) {
    Mat<S> cols = im2col(x, plan.dims, config.decoder_kernel);
    Mat<S> z = linear(cols, params.convs[l]);
    if (trace) trace->columns.push_back(std::move(cols));
    if (l + 1 < layers) {
      x = z.unaryExpr([](S v) { return gelu(v); });
      if (trace) trace->pre.push_back(std::move(z));
    } else {
      x = std::move(z);
    }
  }
  check_finite(x, "student decoder");
  return x;
}

template <typename S>
Mat<S> backward_decoder(const DecoderTrace<S>& trace, const Mat<S>& d_out, const DecoderParams<S>& params,
                        const ModelConfig& config, DecoderParams<S>& grads) {
  Mat<S> dy = d_out;
  for (std::size_t l = params.convs.size(); l-- > 0;) {
    if (l + 1 < params.convs.size()) dy.array() *= trace.pre[l].unaryExpr([](S v) { return gelu_grad(v); }).array();
    const Mat<S> d_cols = linear_backward(trace.columns[l], dy, params.convs[l], grads.convs[l]);
    dy = col2im(d_cols, trace.dims, config.decoder_kernel, config.hidden);
  }
  return dy;
}

template <typename S>
Mat<S> standardize_rows(const Mat<S>& x, double eps) {
  const Vec<S> mean = x.rowwise().mean();
  Mat<S> xc = x.colwise() - mean;
  const Vec<S> rstd = (xc.array().square().rowwise().mean() + static_cast<S>(eps)).rsqrt();
  xc.array().colwise() *= rstd.array();
  return xc;
}

template <typename S>
TeacherTargets<S> average_layer_targets(const std::vector<Mat<S>>& layers) {
  if (layers.empty()) throw UsageError("no teacher layers to average");
  TeacherTargets<S> t;
  t.patch = layers.front();
  for (std::size_t l = 1; l < layers.size(); ++l) t.patch += layers[l];
  t.patch /= static_cast<S>(layers.size());
  t.band = t.patch.colwise().mean();
  return t;
}

template <typename S>
std::vector<Mat<S>> teacher_layer_outputs(const PatchGrid& grid, const EncoderParams<S>& teacher,
                                          const ModelConfig& config) {
  std::vector<int> positions(static_cast<std::size_t>(grid.dims.count()));
  for (int i = 0; i < grid.dims.count(); ++i) positions[static_cast<std::size_t>(i)] = i;
  Mat<S> x = embed_tokens<S>(grid.patches.cast<S>(), positions, grid.dims, teacher, config, false);
  std::vector<Mat<S>> layers;
  layers.reserve(teacher.blocks.size());
  for (const auto& blk : teacher.blocks) {
    x = block_forward<S>(x, blk, config, nullptr);
    check_finite(x, "teacher encoder");
    layers.push_back(x);
  }
  return layers;
}

template <typename S>
TeacherTargets<S> encode_teacher_targets(const PatchGrid& grid, const EncoderParams<S>& teacher,
                                         const ModelConfig& config) {
  std::vector<Mat<S>> layers = teacher_layer_outputs(grid, teacher, config);
  for (auto& l : layers) l = standardize_rows(l, config.norm_eps);
  return average_layer_targets(layers);
}

template <typename S>
void ema_update(ModelState<S>& state, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) throw UsageError("EMA decay must lie in [0, 1]");
  const S a = static_cast<S>(tau);
  const S b = static_cast<S>(1.0 - tau);
  visit_encoder([&](const std::string&, auto& tea, const auto& stu) { tea = a * tea + b * stu; }, state.teacher,
                state.student);
}

template <typename S>
RowVec<S> embed_band(const MatD& band, const EncoderParams<S>& params, const ModelConfig& config) {
  const PatchGrid grid = patchify(band, config.patch);
  const StudentInput input = assemble_student_input(grid, full_visibility_plan(grid.dims));
  return encode_student<S>(input, params, config).cls;
}

Eigen::VectorXd embed_segment(const RawSignal& signal, const ModelState<double>& state, const StftConfig& stft) {
  if (signal.rate < 2.0 * stft.f_base * (1.0 - 1e-12))
    throw DataError("sampling rate below 2 * f_base cannot be embedded");
  const SubBandBatch bands = split_subbands(stft_logmag(signal, stft), stft);
  const int d = state.config.hidden;
  Eigen::VectorXd out(static_cast<Eigen::Index>(bands.size()) * d);
  for (std::size_t k = 0; k < bands.size(); ++k)
    out.segment(static_cast<Eigen::Index>(k) * d, d) = embed_band(bands.slices[k], state.student, state.config).transpose();
  return out;
}

#define FISHER_INSTANTIATE(S)                                                                                   \
  template ModelState<S> init_params<S>(const ModelConfig&, std::uint64_t);                                    \
  template EncoderParams<S> zeros_like<S>(const EncoderParams<S>&);                                            \
  template DecoderParams<S> zeros_like<S>(const DecoderParams<S>&);                                            \
  template StudentGrads<S> zero_grads<S>(const ModelState<S>&);                                                \
  template Mat<S> positional_encoding<S>(GridDims, int);                                                       \
  template StudentEncoding<S> encode_student<S>(const StudentInput&, const EncoderParams<S>&, const ModelConfig&, \
                                                EncoderTrace<S>*);                                             \
  template void backward_student<S>(const EncoderTrace<S>&, const RowVec<S>&, const Mat<S>&,                   \
                                    const EncoderParams<S>&, const ModelConfig&, EncoderParams<S>&);           \
  template Mat<S> decoder_input<S>(const Mat<S>&, const std::vector<int>&, const MaskPlan&, std::uint64_t);    \
  template Mat<S> decode_student<S>(const Mat<S>&, const std::vector<int>&, const MaskPlan&,                   \
                                    const DecoderParams<S>&, const ModelConfig&, std::uint64_t,                \
                                    DecoderTrace<S>*);                                                         \
  template Mat<S> backward_decoder<S>(const DecoderTrace<S>&, const Mat<S>&, const DecoderParams<S>&,          \
                                      const ModelConfig&, DecoderParams<S>&);                                  \
  template Mat<S> standardize_rows<S>(const Mat<S>&, double);                                                  \
  template TeacherTargets<S> average_layer_targets<S>(const std::vector<Mat<S>>&);                             \
  template std::vector<Mat<S>> teacher_layer_outputs<S>(const PatchGrid&, const EncoderParams<S>&,             \
                                                        const ModelConfig&);                                   \
  template TeacherTargets<S> encode_teacher_targets<S>(const PatchGrid&, const EncoderParams<S>&,              \
                                                       const ModelConfig&);                                    \
  template void ema_update<S>(ModelState<S>&, double);                                                         \
  template RowVec<S> embed_band<S>(const MatD&, const EncoderParams<S>&, const ModelConfig&);

FISHER_INSTANTIATE(float)
FISHER_INSTANTIATE(double)

#undef FISHER_INSTANTIATE

}  // namespace fisher
