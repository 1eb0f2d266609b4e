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

#include "fisher/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace fisher {

namespace {

enum : std::uint64_t { kRateTag = 0x5241, kMaskTag = 0x4D41, kNoiseTag = 0x4E4F, kBatchTag = 0x4241, kCapTag = 0x4341 };

template <typename S>
void check_rep(const BandRepresentation<S>& r) {
  if (r.s_band.size() != r.t_band.size()) throw UsageError("band representation width mismatch");
  if (r.s_patch.rows() != r.t_patch.rows() || r.s_patch.cols() != r.t_patch.cols())
    throw UsageError("patch representation shape mismatch");
  if (r.s_patch.cols() != r.s_band.size()) throw UsageError("band and patch widths differ");
  if (!r.s_band.allFinite() || !r.t_band.allFinite() || !r.s_patch.allFinite() || !r.t_patch.allFinite())
    throw DivergenceError("non-finite representation in loss");
}

struct SliceTerms {
  double band = 0.0;
  double patch = 0.0;
};

LossBreakdown combine(const std::vector<SliceTerms>& terms) {
  LossBreakdown out;
  for (const auto& t : terms) {
    out.l_band += t.band;
    out.l_patch += t.patch;
  }
  const double n = static_cast<double>(terms.size());
  out.l_band /= n;
  out.l_patch /= n;
  out.total = out.l_band + out.l_patch;
  if (!std::isfinite(out.total)) throw DivergenceError("non-finite loss");
  return out;
}

template <typename S>
SliceTerms slice_terms(const BandRepresentation<S>& r) {
  return {static_cast<double>((r.s_band - r.t_band).squaredNorm()) / static_cast<double>(r.s_band.size()),
          static_cast<double>((r.s_patch - r.t_patch).squaredNorm()) / static_cast<double>(r.s_patch.size())};
}

struct SliceForward {
  BandRepresentation<double> rep;
  StudentInput input;
  EncoderTrace<double> enc_trace;
  DecoderTrace<double> dec_trace;
};

SliceForward run_forward(const SliceJob& job, const ModelState<double>& state, bool traced) {
  SliceForward f;
  const TeacherTargets<double> targets = encode_teacher_targets(job.grid, state.teacher, state.config);
  f.input = assemble_student_input(job.grid, job.plan);
  const StudentEncoding<double> enc =
      encode_student(f.input, state.student, state.config, traced ? &f.enc_trace : nullptr);
  f.rep.s_band = enc.cls;
  f.rep.s_patch = decode_student(enc.visible, f.input.positions, job.plan, state.decoder, state.config,
                                 job.noise_seed, traced ? &f.dec_trace : nullptr);
  f.rep.t_band = targets.band;
  f.rep.t_patch = targets.patch;
  return f;
}

void add_into(StudentGrads<double>& acc, const StudentGrads<double>& g) {
  visit_student([](const std::string&, auto& a, const auto& b) { a += b; }, acc, g);
}

void zero_out(StudentGrads<double>& g) {
  visit_student([](const std::string&, auto& a) { a.setZero(); }, g);
}

std::string format_row(const StepReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g", static_cast<long long>(r.step), r.loss.l_band,
                r.loss.l_patch, r.loss.total, r.lr);
  return buf;
}

}  // namespace

void TrainConfig::validate() const {
  if (steps < 0) throw UsageError("steps must be nonnegative");
  if (warmup_steps < 0 || warmup_steps > steps) throw UsageError("warmup_steps must lie in [0, steps]");
  if (!(peak_lr > 0.0)) throw UsageError("peak_lr must be positive");
  if (batch_size < 1) throw UsageError("batch_size must be at least 1");
  if (clones_per_band < 1) throw UsageError("clones_per_band must be at least 1");
  if (!(mask_ratio > 0.0 && mask_ratio < 1.0)) throw UsageError("mask_ratio must lie in (0, 1)");
  for (double t : {tau_start, tau_end})
    if (!(t >= 0.0 && t <= 1.0)) throw UsageError("tau must lie in [0, 1]");
  if (tau_ramp_steps < 0) throw UsageError("tau_ramp_steps must be nonnegative");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw UsageError("Adam betas must lie in [0, 1)");
  if (!(adam_eps > 0.0)) throw UsageError("adam_eps must be positive");
  if (weight_decay < 0.0 || grad_clip < 0.0) throw UsageError("weight_decay and grad_clip must be nonnegative");
  if (checkpoint_every < 0) throw UsageError("checkpoint_every must be nonnegative");
  if (threads < 1) throw UsageError("threads must be at least 1");
}

template <typename S>
LossBreakdown compute_loss(std::span<const BandRepresentation<S>> reps, LossGradient<S>* grad) {
  if (reps.empty()) throw UsageError("loss over an empty batch");
  std::vector<SliceTerms> terms;
  terms.reserve(reps.size());
  for (const auto& r : reps) {
    check_rep(r);
    terms.push_back(slice_terms(r));
  }
  if (grad) {
    const S n = static_cast<S>(reps.size());
    grad->d_band.clear();
    grad->d_patch.clear();
    for (const auto& r : reps) {
      grad->d_band.push_back((r.s_band - r.t_band) * (S(2) / (static_cast<S>(r.s_band.size()) * n)));
      grad->d_patch.push_back((r.s_patch - r.t_patch) * (S(2) / (static_cast<S>(r.s_patch.size()) * n)));
    }
  }
  return combine(terms);
}

template LossBreakdown compute_loss<float>(std::span<const BandRepresentation<float>>, LossGradient<float>*);
template LossBreakdown compute_loss<double>(std::span<const BandRepresentation<double>>, LossGradient<double>*);

double lr_at_step(std::int64_t step, const TrainConfig& c) {
  if (step < 0 || step > c.steps) throw UsageError("lr step outside [0, steps]");
  if (step <= c.warmup_steps) {
    if (c.warmup_steps == 0) return c.peak_lr;
    return c.peak_lr * static_cast<double>(step) / static_cast<double>(c.warmup_steps);
  }
  const double span = static_cast<double>(c.steps - c.warmup_steps);
  const double progress = static_cast<double>(step - c.warmup_steps) / span;
  return c.peak_lr * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

double tau_at_step(std::int64_t step, const TrainConfig& c) {
  if (c.tau_ramp_steps <= 0) return c.tau_start;
  const double a = std::clamp(static_cast<double>(step) / static_cast<double>(c.tau_ramp_steps), 0.0, 1.0);
  return c.tau_start + (c.tau_end - c.tau_start) * a;
}

LossBreakdown forward_loss(std::span<const SliceJob> jobs, const ModelState<double>& state) {
  if (jobs.empty()) throw UsageError("loss over an empty batch");
  std::vector<SliceTerms> terms;
  for (const auto& job : jobs) {
    const SliceForward f = run_forward(job, state, false);
    check_rep(f.rep);
    terms.push_back(slice_terms(f.rep));
  }
  return combine(terms);
}

ForwardBackward forward_backward(std::span<const SliceJob> jobs, const ModelState<double>& state, int threads) {
  if (jobs.empty()) throw UsageError("loss over an empty batch");
  const std::size_t n = jobs.size();
  const std::size_t wave = static_cast<std::size_t>(std::max(1, threads));
  const double scale = 2.0 / static_cast<double>(n);

  ForwardBackward out;
  out.grads = zero_grads(state);
  out.teacher_grads = zeros_like(state.teacher);
  std::vector<SliceTerms> terms(n);
  std::vector<StudentGrads<double>> buffers(std::min(wave, n), out.grads);

  for (std::size_t begin = 0; begin < n; begin += wave) {
    const std::size_t count = std::min(wave, n - begin);
    parallel_for(count, threads, [&](std::size_t k) {
      const SliceJob& job = jobs[begin + k];
      StudentGrads<double>& g = buffers[k];
      zero_out(g);
      SliceForward f = run_forward(job, state, true);
      check_rep(f.rep);
      terms[begin + k] = slice_terms(f.rep);
      const RowVecD d_band = (f.rep.s_band - f.rep.t_band) * (scale / static_cast<double>(f.rep.s_band.size()));
      const MatD d_patch = (f.rep.s_patch - f.rep.t_patch) * (scale / static_cast<double>(f.rep.s_patch.size()));
      const MatD d_in = backward_decoder(f.dec_trace, d_patch, state.decoder, state.config, g.decoder);
      MatD d_visible(static_cast<Eigen::Index>(f.input.positions.size()), d_in.cols());
      for (std::size_t i = 0; i < f.input.positions.size(); ++i)
        d_visible.row(static_cast<Eigen::Index>(i)) = d_in.row(f.input.positions[i]);
      backward_student(f.enc_trace, d_band, d_visible, state.student, state.config, g.encoder);
    });
    for (std::size_t k = 0; k < count; ++k) add_into(out.grads, buffers[k]);
  }
  out.loss = combine(terms);
  return out;
}

std::vector<SliceJob> prepare_batch(std::span<const RawSignal> batch, std::int64_t step, const TrainConfig& config,
                                    const StftConfig& stft, const ModelConfig& model, double* batch_rate) {
  if (batch.empty()) throw UsageError("empty training batch");
  const auto s = static_cast<std::uint64_t>(step);
  const double rate = pick_batch_rate(derive_seed(config.seed, {kRateTag, s}), stft);
  if (batch_rate) *batch_rate = rate;

  SubBandBatch bands;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Spectrogram spec = stft_logmag(resample(batch[i], rate), stft);
    bands.append(split_subbands(spec, stft, static_cast<int>(i)));
  }

  // More distinct sub-bands than m_b: keep a seeded subset, original order.
  if (config.max_clones > 0 && static_cast<int>(bands.size()) > config.max_clones) {
    std::vector<std::size_t> idx(bands.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(derive_seed(config.seed, {kCapTag, s}));
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(config.max_clones));
    std::sort(idx.begin(), idx.end());
    SubBandBatch kept;
    for (std::size_t i : idx) {
      kept.slices.push_back(std::move(bands.slices[i]));
      kept.origin.push_back(bands.origin[i]);
    }
    bands = std::move(kept);
  }

  const ClonedBatch cloned = clone_with_masks(bands, config.clones_per_band, config.max_clones, config.mask_ratio,
                                              model.patch, derive_seed(config.seed, {kMaskTag, s}));
  std::vector<SliceJob> jobs;
  jobs.reserve(cloned.plans.size());
  for (std::size_t j = 0; j < cloned.plans.size(); ++j) {
    SliceJob job;
    job.grid = patchify(cloned.bands.slices[j], model.patch);
    job.plan = cloned.plans[j];
    job.noise_seed = derive_seed(config.seed, {kNoiseTag, s, static_cast<std::uint64_t>(j)});
    jobs.push_back(std::move(job));
  }
  return jobs;
}

double global_norm(const StudentGrads<double>& grads) {
  double sq = 0.0;
  visit_student([&](const std::string&, const auto& g) { sq += g.squaredNorm(); }, grads);
  return std::sqrt(sq);
}

void adam_update(ModelState<double>& state, OptimizerState& opt, const StudentGrads<double>& grads, double lr,
                 const TrainConfig& c) {
  ++opt.t;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(opt.t));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(opt.t));
  StudentGrads<double> params{std::move(state.student), std::move(state.decoder)};
  visit_student(
      [&](const std::string&, auto& p, const auto& g, auto& m, auto& v) {
        m = c.beta1 * m + (1.0 - c.beta1) * g;
        v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
        const auto step = ((m.array() / bc1) / ((v.array() / bc2).sqrt() + c.adam_eps)).matrix();
        p -= lr * (step + c.weight_decay * p);
      },
      params, grads, opt.m, opt.v);
  state.student = std::move(params.encoder);
  state.decoder = std::move(params.decoder);
}

StepReport train_step(std::span<const RawSignal> batch, ModelState<double>& state, OptimizerState& opt,
                      const TrainConfig& config, const StftConfig& stft) {
  if (state.step >= config.steps) throw UsageError("training already reached the configured step count");
  StepReport r;
  const std::vector<SliceJob> jobs = prepare_batch(batch, state.step, config, stft, state.config, &r.batch_rate);
  ForwardBackward fb = forward_backward(jobs, state, config.threads);
  r.grad_norm = global_norm(fb.grads);
  if (!std::isfinite(r.grad_norm))
    throw DivergenceError("non-finite gradient at step " + std::to_string(state.step + 1));
  if (config.grad_clip > 0.0 && r.grad_norm > config.grad_clip) {
    const double k = config.grad_clip / r.grad_norm;
    visit_student([&](const std::string&, auto& g) { g *= k; }, fb.grads);
  }
  r.lr = lr_at_step(state.step, config);
  r.tau = tau_at_step(state.step, config);
  adam_update(state, opt, fb.grads, r.lr, config);
  ema_update(state, r.tau);
  ++state.step;
  r.step = state.step;
  r.loss = fb.loss;
  r.slices = static_cast<int>(jobs.size());
  return r;
}

std::vector<std::size_t> batch_indices(std::size_t corpus_size, std::int64_t step, const TrainConfig& config) {
  if (corpus_size == 0) throw UsageError("empty training corpus");
  std::vector<std::size_t> idx(corpus_size);
  for (std::size_t i = 0; i < corpus_size; ++i) idx[i] = i;
  const std::size_t b = std::min(corpus_size, static_cast<std::size_t>(config.batch_size));
  std::mt19937_64 rng(derive_seed(config.seed, {kBatchTag, static_cast<std::uint64_t>(step)}));
  for (std::size_t i = 0; i < b; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, corpus_size - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(b);
  return idx;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, std::int64_t step) {
  char name[48];
  std::snprintf(name, sizeof name, "step_%08lld.ckpt", static_cast<long long>(step));
  return out_dir / "checkpoints" / name;
}

TrainLoopResult train_loop(std::span<const RawSignal> corpus, ModelState<double>& state, OptimizerState& opt,
                           const TrainConfig& config, const StftConfig& stft, const std::filesystem::path& out_dir,
                           const std::function<void(const StepReport&)>& on_step) {
  config.validate();
  if (corpus.empty()) throw UsageError("empty training corpus");
  std::filesystem::create_directories(out_dir / "checkpoints");
  TrainLoopResult result;
  result.loss_log = out_dir / "loss_log.csv";

  std::vector<std::string> rows;
  const bool resumed = state.step > 0;
  if (resumed) {
    std::ifstream in(result.loss_log);
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (std::stoll(line.substr(0, line.find(','))) <= state.step) rows.push_back(line);
    }
  }
  const auto flush_log = [&] {
    std::ofstream out(result.loss_log, std::ios::trunc);
    if (!out) throw DataError("cannot write " + result.loss_log.string());
    out << "step,l_band,l_patch,total,lr\n";
    for (const auto& row : rows) out << row << '\n';
  };
  const auto save = [&] {
    const auto path = checkpoint_path(out_dir, state.step);
    save_checkpoint(path, state, stft, &opt);
    result.checkpoints.push_back(path);
  };

  if (!resumed) save();
  flush_log();
  std::vector<RawSignal> batch;
  while (state.step < config.steps) {
    batch.clear();
    for (std::size_t i : batch_indices(corpus.size(), state.step, config)) batch.push_back(corpus[i]);
    const StepReport r = train_step(batch, state, opt, config, stft);
    result.log.push_back(r);
    rows.push_back(format_row(r));
    if (on_step) on_step(r);
    const bool periodic = config.checkpoint_every > 0 && state.step % config.checkpoint_every == 0;
    if (periodic || state.step == config.steps) {
      flush_log();
      save();
    }
  }
  flush_log();
  return result;
}

}  // namespace fisher
