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

#include "fisher/signal.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>
#include <random>

#include <unsupported/Eigen/FFT>

namespace fisher {

namespace {

constexpr double kRolloff = 0.95;
constexpr double kZeroCrossings = 32.0;
constexpr double kKaiserBeta = 8.6;
constexpr std::int64_t kMaxPhaseTable = 4096;

bool is_integral(double x) { return std::abs(x - std::round(x)) < 1e-9 * std::max(1.0, std::abs(x)); }

class SincKernel {
 public:
  SincKernel(double cutoff) : cutoff_(cutoff), half_width_(kZeroCrossings / (2.0 * cutoff)),
                              norm_(std::cyl_bessel_i(0.0, kKaiserBeta)) {}

  double half_width() const { return half_width_; }

  double operator()(double d) const {
    const double u = d / half_width_;
    if (u <= -1.0 || u >= 1.0) return 0.0;
    const double x = 2.0 * cutoff_ * d;
    const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
    const double window = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - u * u)) / norm_;
    return 2.0 * cutoff_ * sinc * window;
  }

 private:
  double cutoff_;      // cycles per input sample
  double half_width_;  // input samples
  double norm_;
};

}  // namespace

void RawSignal::validate() const {
  if (!(rate > 0.0) || !std::isfinite(rate)) throw DataError("signal rate must be positive");
  if (samples.size() == 0) throw DataError("signal has no samples");
  if (!samples.allFinite()) throw DataError("signal contains non-finite samples");
}

void SubBandBatch::append(const SubBandBatch& other) {
  slices.insert(slices.end(), other.slices.begin(), other.slices.end());
  origin.insert(origin.end(), other.origin.begin(), other.origin.end());
}

void StftConfig::validate() const {
  if (!(t_win > 0.0)) throw UsageError("stft.t_win must be positive");
  if (!(t_hop > 0.0) || t_hop > t_win) throw UsageError("stft.t_hop must lie in (0, t_win]");
  const double w = f_base * t_win;
  if (!(w >= 1.0) || !is_integral(w)) throw UsageError("stft.f_base * stft.t_win must be a positive integer");
  if (f_max < 2.0 * f_base) throw UsageError("stft.f_max must be at least 2 * f_base");
  if (!(epsilon > 0.0)) throw UsageError("stft.epsilon must be positive");
}

int StftConfig::bandwidth() const { return static_cast<int>(std::lround(f_base * t_win)); }

int StftConfig::window_length(double rate) const { return static_cast<int>(std::lround(t_win * rate)); }

int StftConfig::hop_length(double rate) const {
  return std::max(1, static_cast<int>(std::lround(t_hop * rate)));
}

RawSignal resample(const RawSignal& signal, double target_rate) {
  if (!(target_rate > 0.0) || !std::isfinite(target_rate)) throw UsageError("target rate must be positive");
  signal.validate();
  if (target_rate == signal.rate) return signal;

  const Eigen::Index in_len = signal.size();
  const bool rational = is_integral(signal.rate) && is_integral(target_rate);
  std::int64_t up = 0, down = 0;
  Eigen::Index out_len = 0;
  if (rational) {
    const auto src = static_cast<std::int64_t>(std::llround(signal.rate));
    const auto dst = static_cast<std::int64_t>(std::llround(target_rate));
    const std::int64_t g = std::gcd(src, dst);
    up = dst / g;
    down = src / g;
    out_len = static_cast<Eigen::Index>((static_cast<std::int64_t>(in_len) * up) / down);
  } else {
    out_len = static_cast<Eigen::Index>(std::floor(static_cast<double>(in_len) * target_rate / signal.rate));
  }

  RawSignal out;
  out.rate = target_rate;
  out.meta = signal.meta;
  out.samples = Eigen::VectorXd::Zero(out_len);
  if (out_len == 0) return out;

  const SincKernel kernel(0.5 * std::min(1.0, target_rate / signal.rate) * kRolloff);
  const auto taps = static_cast<Eigen::Index>(std::ceil(kernel.half_width()));
  const Eigen::VectorXd& x = signal.samples;

  auto convolve = [&](Eigen::Index base, const auto& weight) {
    double acc = 0.0;
    const Eigen::Index lo = std::max<Eigen::Index>(0, base - taps + 1);
    const Eigen::Index hi = std::min<Eigen::Index>(in_len - 1, base + taps);
    for (Eigen::Index n = lo; n <= hi; ++n) acc += x[n] * weight(n - base);
    return acc;
  };

  if (rational && up <= kMaxPhaseTable) {
    // Output m sits at input position m * down / up; its fractional part cycles
    // through `up` phases, so the kernel is tabulated once per phase.
    MatD table(up, 2 * taps);
    for (std::int64_t p = 0; p < up; ++p) {
      const double frac = static_cast<double>(p) / static_cast<double>(up);
      for (Eigen::Index j = -taps + 1; j <= taps; ++j) table(p, j + taps - 1) = kernel(frac - static_cast<double>(j));
    }
    for (Eigen::Index m = 0; m < out_len; ++m) {
      const std::int64_t pos = static_cast<std::int64_t>(m) * down;
      const auto base = static_cast<Eigen::Index>(pos / up);
      const std::int64_t phase = pos % up;
      out.samples[m] = convolve(base, [&](Eigen::Index j) { return table(phase, j + taps - 1); });
    }
  } else {
    const double step = signal.rate / target_rate;
    for (Eigen::Index m = 0; m < out_len; ++m) {
      const double t = static_cast<double>(m) * step;
      const auto base = static_cast<Eigen::Index>(std::floor(t));
      const double frac = t - static_cast<double>(base);
      out.samples[m] = convolve(base, [&](Eigen::Index j) { return kernel(frac - static_cast<double>(j)); });
    }
  }
  return out;
}

std::vector<double> candidate_rates(const StftConfig& config) {
  std::vector<double> rates;
  for (int m = 2;; ++m) {
    const double r = m * config.f_base;
    if (r > config.f_max * (1.0 + 1e-12)) break;
    rates.push_back(r);
  }
  return rates;
}

double pick_batch_rate(std::uint64_t seed, const StftConfig& config) {
  const std::vector<double> rates = candidate_rates(config);
  if (rates.empty()) throw UsageError("no harmonic of f_base lies in [2 * f_base, f_max]");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, rates.size() - 1);
  return rates[pick(rng)];
}

Spectrogram stft_logmag(const RawSignal& signal, const StftConfig& config) {
  config.validate();
  signal.validate();
  const int n_win = config.window_length(signal.rate);
  const int hop = config.hop_length(signal.rate);
  if (n_win < 2) throw DataError("sampling rate too low for the STFT window");
  if (signal.size() < n_win) throw DataError("signal shorter than one STFT window");

  const Eigen::Index frames = 1 + (signal.size() - n_win) / hop;
  const Eigen::Index bins = n_win / 2 + 1;

  // Periodic Hann window; magnitudes are normalized by its coherent gain.
  Eigen::VectorXd window(n_win);
  for (int n = 0; n < n_win; ++n) window[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * n / n_win);
  const double gain = window.sum();

  Spectrogram spec;
  spec.rate = signal.rate;
  spec.window_length = n_win;
  spec.hop_length = hop;
  spec.bin_spacing = signal.rate / n_win;
  spec.frame_spacing = hop / signal.rate;
  spec.values.resize(frames, bins);

  Eigen::FFT<double> fft;
  fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
  std::vector<double> frame(n_win);
  std::vector<std::complex<double>> spectrum;
  for (Eigen::Index t = 0; t < frames; ++t) {
    const Eigen::Index start = t * hop;
    for (int n = 0; n < n_win; ++n) frame[n] = signal.samples[start + n] * window[n];
    fft.fwd(spectrum, frame);
    for (Eigen::Index k = 0; k < bins; ++k)
      spec.values(t, k) = std::log(std::abs(spectrum[k]) / gain + config.epsilon);
  }
  return spec;
}

int subband_count(Eigen::Index bins, const StftConfig& config) {
  return static_cast<int>(bins / config.bandwidth());
}

int subband_count_for_rate(double rate, const StftConfig& config) {
  return subband_count(config.window_length(rate) / 2 + 1, config);
}

SubBandBatch split_subbands(const Spectrogram& spec, const StftConfig& config, int item) {
  const int w = config.bandwidth();
  const int n = subband_count(spec.bins(), config);
  if (n < 1)
    throw DataError("spectrogram narrower than one sub-band; sampling rate below 2 * f_base is unsupported");
  SubBandBatch batch;
  batch.slices.reserve(n);
  for (int k = 0; k < n; ++k) {
    batch.slices.emplace_back(spec.values.middleCols(static_cast<Eigen::Index>(k) * w, w));
    batch.origin.push_back({item, k});
  }
  return batch;
}

}  // namespace fisher
