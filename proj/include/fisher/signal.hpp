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

#ifndef FISHER_SIGNAL_HPP_
#define FISHER_SIGNAL_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fisher/common.hpp"

namespace fisher {

struct SignalMeta {
  std::string dataset;
  std::string recording_id;
  std::string label;
  int channel = 0;
};

/// A single-channel sample sequence at a known sampling rate (Hz).
struct RawSignal {
  Eigen::VectorXd samples;
  double rate = 0.0;
  SignalMeta meta;

  Eigen::Index size() const { return samples.size(); }
  double duration() const { return static_cast<double>(samples.size()) / rate; }
  /// Throws DataError unless rate > 0, samples non-empty and all finite.
  void validate() const;
};

/// STFT geometry expressed in seconds and Hz so that the frequency grid does
/// not depend on the sampling rate: bin spacing is always 1 / t_win.
struct StftConfig {
  double t_win = 0.025;
  double t_hop = 0.010;
  double f_base = 4000.0;
  double f_max = 32000.0;
  double epsilon = 1e-10;

  void validate() const;
  /// Sub-band width w in bins: f_base * t_win.
  int bandwidth() const;
  int window_length(double rate) const;
  int hop_length(double rate) const;
};

/// Log-magnitude spectrogram, T frames x F bins.
struct Spectrogram {
  MatD values;
  double rate = 0.0;
  double bin_spacing = 0.0;   // Hz
  double frame_spacing = 0.0; // seconds
  int window_length = 0;
  int hop_length = 0;

  Eigen::Index frames() const { return values.rows(); }
  Eigen::Index bins() const { return values.cols(); }
};

struct SliceOrigin {
  int item = 0;
  int band = 0;
};

/// Sub-band slices stacked along the batch axis. Every slice is T x w.
struct SubBandBatch {
  std::vector<MatD> slices;
  std::vector<SliceOrigin> origin;

  std::size_t size() const { return slices.size(); }
  void append(const SubBandBatch& other);
};

// Windowed-sinc resampler with a Kaiser window (beta 8.6, 32 zero crossings
// per side, cutoff at 0.95 of the lower Nyquist frequency). Stopband
// attenuation is about 85 dB. Output length is floor(L * target / rate).
RawSignal resample(const RawSignal& signal, double target_rate);

/// Harmonics m * f_base, m >= 2, not exceeding f_max, in ascending order.
std::vector<double> candidate_rates(const StftConfig& config);
/// Uniform draw from candidate_rates, deterministic in the seed.
double pick_batch_rate(std::uint64_t seed, const StftConfig& config);

/// Hann-windowed one-sided STFT without centre padding. Magnitudes are
/// divided by the window sum before taking log(|X| + epsilon).
Spectrogram stft_logmag(const RawSignal& signal, const StftConfig& config);

/// Number of full sub-bands a spectrogram with `bins` frequency bins holds.
int subband_count(Eigen::Index bins, const StftConfig& config);
/// Number of sub-bands for a signal sampled at `rate`.
int subband_count_for_rate(double rate, const StftConfig& config);

/// Splits a spectrogram into floor(F / w) contiguous bands; leftover bins are
/// dropped. Slices are tagged with `item` and their band index.
SubBandBatch split_subbands(const Spectrogram& spec, const StftConfig& config, int item = 0);

}  // namespace fisher

#endif  // FISHER_SIGNAL_HPP_
