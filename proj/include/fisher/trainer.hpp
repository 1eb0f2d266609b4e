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

#ifndef FISHER_TRAINER_HPP_
#define FISHER_TRAINER_HPP_

#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "fisher/checkpoint.hpp"
#include "fisher/model.hpp"

namespace fisher {

struct TrainConfig {
  std::int64_t steps = 300;
  std::int64_t warmup_steps = 30;
  double peak_lr = 5e-4;
  int batch_size = 8;
  int clones_per_band = 2;
  int max_clones = 32;  // m_b; <= 0 disables the cap
  double mask_ratio = 0.8;
  double tau_start = 0.999;
  double tau_end = 0.999;
  std::int64_t tau_ramp_steps = 0;  // 0: constant tau_start
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double weight_decay = 0.0;
  double grad_clip = 0.0;  // global L2 norm; 0 disables
  std::int64_t checkpoint_every = 100;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct LossBreakdown {
  double l_band = 0.0;
  double l_patch = 0.0;
  double total = 0.0;
};

template <typename Scalar>
struct BandRepresentation {
  RowVec<Scalar> s_band;
  Mat<Scalar> s_patch;
  RowVec<Scalar> t_band;
  Mat<Scalar> t_patch;
};

/// dL/ds for every slice; teacher values are constants.
template <typename Scalar>
struct LossGradient {
  std::vector<RowVec<Scalar>> d_band;
  std::vector<Mat<Scalar>> d_patch;
};

/// Mean-reduced squared error: l_band averages over slices and dims,
/// l_patch over slices, positions and dims.
template <typename Scalar>
LossBreakdown compute_loss(std::span<const BandRepresentation<Scalar>> reps, LossGradient<Scalar>* grad = nullptr);

/// Linear ramp to peak_lr at warmup_steps, cosine decay to 0 at steps.
double lr_at_step(std::int64_t step, const TrainConfig& config);
double tau_at_step(std::int64_t step, const TrainConfig& config);

/// One masked clone of one sub-band, ready for the model.
struct SliceJob {
  PatchGrid grid;
  MaskPlan plan;
  std::uint64_t noise_seed = 0;
};

struct ForwardBackward {
  LossBreakdown loss;
  StudentGrads<double> grads;
  EncoderParams<double> teacher_grads;  // stays zero: targets are stop-gradient
};

/// Loss only, no traces.
LossBreakdown forward_loss(std::span<const SliceJob> jobs, const ModelState<double>& state);

/// Loss and student gradients. Per-slice gradients are reduced in slice order,
/// so the result does not depend on the thread count.
ForwardBackward forward_backward(std::span<const SliceJob> jobs, const ModelState<double>& state, int threads = 1);

/// Resample, STFT, split, cap at m_b, clone and mask. Seeds derive from
/// (config.seed, step).
std::vector<SliceJob> prepare_batch(std::span<const RawSignal> batch, std::int64_t step, const TrainConfig& config,
                                    const StftConfig& stft, const ModelConfig& model, double* batch_rate = nullptr);

double global_norm(const StudentGrads<double>& grads);

void adam_update(ModelState<double>& state, OptimizerState& opt, const StudentGrads<double>& grads, double lr,
                 const TrainConfig& config);

struct StepReport {
  std::int64_t step = 0;  // step index after the update
  LossBreakdown loss;
  double lr = 0.0;
  double tau = 0.0;
  double batch_rate = 0.0;
  int slices = 0;
  double grad_norm = 0.0;
};

/// One optimisation step; increments state.step.
StepReport train_step(std::span<const RawSignal> batch, ModelState<double>& state, OptimizerState& opt,
                      const TrainConfig& config, const StftConfig& stft);

/// Corpus indices used at `step`: batch_size draws without replacement.
std::vector<std::size_t> batch_indices(std::size_t corpus_size, std::int64_t step, const TrainConfig& config);

struct TrainLoopResult {
  std::vector<StepReport> log;
  std::vector<std::filesystem::path> checkpoints;
  std::filesystem::path loss_log;
};

/// Runs from state.step up to config.steps. Writes
///   <out>/checkpoints/step_NNNNNNNN.ckpt  at step 0 (fresh runs), every
///                                         checkpoint_every steps and the end
///   <out>/loss_log.csv                    step,l_band,l_patch,total,lr
/// On resume, log rows past the resumed step are replaced.
TrainLoopResult train_loop(std::span<const RawSignal> corpus, ModelState<double>& state, OptimizerState& opt,
                           const TrainConfig& config, const StftConfig& stft, const std::filesystem::path& out_dir,
                           const std::function<void(const StepReport&)>& on_step = {});

std::filesystem::path checkpoint_path(const std::filesystem::path& out_dir, std::int64_t step);

}  // namespace fisher

#endif  // FISHER_TRAINER_HPP_
