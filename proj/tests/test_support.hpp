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

#ifndef FISHER_TESTS_TEST_SUPPORT_HPP_
#define FISHER_TESTS_TEST_SUPPORT_HPP_

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "fisher/signal.hpp"

namespace fisher::testing {

struct Tone {
  double freq;
  double amp;
  double phase = 0.0;
};

/// Sum of sinusoids sampled at `rate`: the same continuous signal at any rate.
inline RawSignal tones(const std::vector<Tone>& parts, double rate, double seconds) {
  RawSignal s;
  s.rate = rate;
  const auto n = static_cast<Eigen::Index>(std::floor(seconds * rate));
  s.samples = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    for (const auto& p : parts) s.samples[i] += p.amp * std::sin(2.0 * std::numbers::pi * p.freq * t + p.phase);
  }
  return s;
}

inline RawSignal sine(double freq, double rate, double seconds, double amp = 1.0) {
  return tones({{freq, amp}}, rate, seconds);
}

inline RawSignal noise(double rate, double seconds, std::uint64_t seed, double amp = 0.1) {
  RawSignal s;
  s.rate = rate;
  s.samples.resize(static_cast<Eigen::Index>(std::floor(seconds * rate)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, amp);
  for (auto& v : s.samples) v = g(rng);
  return s;
}

inline double rms(const Eigen::VectorXd& x) { return std::sqrt(x.squaredNorm() / static_cast<double>(x.size())); }

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("fisher_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace fisher::testing

#endif  // FISHER_TESTS_TEST_SUPPORT_HPP_
