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

#ifndef FISHER_SYNTH_HPP_
#define FISHER_SYNTH_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fisher/config.hpp"
#include "fisher/harness.hpp"
#include "fisher/signal.hpp"

namespace fisher {

enum class FaultType { none, extra_tone, sideband, impulse_train, hf_burst };

std::string fault_name(FaultType fault);
FaultType parse_fault(const std::string& name);

/// One machine recording. Amplitudes are relative to the fundamental.
struct MachineSpec {
  double base_freq = 200.0;  // Hz, rotation fundamental
  int harmonics = 6;
  double harmonic_decay = 0.6;  // amplitude ratio between adjacent harmonics
  double am_depth = 0.2;
  double am_rate = 3.0;  // Hz
  double noise = 0.02;   // Gaussian noise std
  FaultType fault = FaultType::none;
  double intensity = 0.0;
  double fault_freq = 0.0;  // Hz; 0 picks the type default
  double rate = 16000.0;
  double duration = 2.0;  // seconds
  std::uint64_t seed = 0;

  /// Throws UsageError unless base_freq < rate / 2, duration >= t_win and all
  /// amplitudes are non-negative.
  void validate(double t_win = 0.025) const;
};

// Fault signatures (defaults in brackets):
//   extra_tone     sinusoid at a non-harmonic frequency [9.5 f0]
//   sideband       pair at fc -/+ f0/4 around the harmonic fc nearest [5 f0]
//   impulse_train  decaying 3 kHz rings repeating at [f0 / 10] Hz
//   hf_burst       3.0-3.8 kHz band noise, 80 ms bursts every 250 ms
// Frequencies above 0.45 rate are pulled down to stay below Nyquist.
RawSignal gen_signal(const MachineSpec& spec);

struct ClassRecipe {
  std::string label;
  FaultType fault = FaultType::none;
  double intensity = 0.0;
  double fault_freq = 0.0;
};

enum class CorpusTask { fault_diagnosis, anomaly_detection, pretrain };

/// Key-value recipe; see docs/formats.md for the keys.
struct CorpusRecipe {
  std::string name = "synth";
  CorpusTask task = CorpusTask::fault_diagnosis;
  std::string modality = "vibration";
  std::uint64_t seed = 0;
  std::vector<double> rates{16000.0};  // assigned round-robin over recordings
  double duration = 12.0;
  int channels = 1;
  double base_min = 190.0, base_max = 210.0;
  int harmonics = 6;
  double harmonic_decay = 0.6;
  double am_depth = 0.2;
  double am_rate = 3.0;
  double noise = 0.02;
  // Fault diagnosis.
  std::vector<ClassRecipe> classes;
  int recordings_per_class = 6;
  // Anomaly detection: machine ids 00, 01, ... with distinct speed ranges.
  int machines = 2;
  int train_per_machine = 12;
  int test_normal_per_machine = 6;
  int test_anomaly_per_machine = 6;
  std::vector<FaultType> anomaly_faults{FaultType::extra_tone, FaultType::impulse_train, FaultType::hf_burst};
  double anomaly_intensity = 0.5;
  // Pre-training: faults cycle through all types at random intensity.
  int clips = 200;
  double max_intensity = 1.0;

  void validate() const;
};

CorpusRecipe parse_recipe(const KeyValues& values);
CorpusRecipe read_recipe(const std::filesystem::path& path);
/// Named built-in recipes: fd-high, fd-low, ad, pretrain.
CorpusRecipe builtin_recipe(const std::string& name);
std::vector<std::string> builtin_recipe_names();

struct CorpusOutput {
  Manifest manifest;
  ClassSets classes;
};

/// Writes <out>/audio/<recording>.wav (32-bit float), <out>/manifest.csv and
/// <out>/classes.csv. Files are generated in parallel with per-file seeds.
CorpusOutput gen_corpus(const CorpusRecipe& recipe, const std::filesystem::path& out_dir, int threads = 1);

/// The manifest rows gen_corpus would write, paired with their specs (one per
/// channel), without touching the file system.
struct PlannedRecording {
  ManifestRow row;
  std::vector<MachineSpec> channels;
};
std::vector<PlannedRecording> plan_corpus(const CorpusRecipe& recipe);

}  // namespace fisher

#endif  // FISHER_SYNTH_HPP_
