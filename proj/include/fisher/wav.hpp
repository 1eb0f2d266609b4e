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

#ifndef FISHER_WAV_HPP_
#define FISHER_WAV_HPP_

#include <filesystem>
#include <vector>

#include "fisher/signal.hpp"

namespace fisher {

struct MultiChannelAudio {
  std::vector<Eigen::VectorXd> channels;
  double rate = 0.0;
};

/// Reads RIFF/WAVE PCM (16, 24, 32-bit integer) or IEEE float (32, 64-bit),
/// including WAVE_FORMAT_EXTENSIBLE. Integer samples are scaled to [-1, 1).
MultiChannelAudio read_wav(const std::filesystem::path& path);

/// Writes 32-bit float WAVE. All channels must have equal length.
void write_wav_float(const std::filesystem::path& path, const MultiChannelAudio& audio);

/// Headerless text file, one sample per line.
Eigen::VectorXd read_csv_samples(const std::filesystem::path& path);

/// Dispatches on extension: .wav via read_wav, anything else as CSV with the
/// supplied rate.
MultiChannelAudio read_audio(const std::filesystem::path& path, double csv_rate);

}  // namespace fisher

#endif  // FISHER_WAV_HPP_
