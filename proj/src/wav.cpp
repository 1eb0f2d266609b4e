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

#include "fisher/wav.hpp"

#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

namespace fisher {

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t le32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put32(std::ostream& os, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  os.write(reinterpret_cast<const char*>(b), 4);
}
void put16(std::ostream& os, std::uint16_t v) {
  const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<const char*>(b), 2);
}

double decode_sample(const unsigned char* p, std::uint16_t format, std::uint16_t bits) {
  if (format == kFormatFloat) {
    if (bits == 32) {
      float f;
      std::uint32_t u = le32(p);
      std::memcpy(&f, &u, 4);
      return f;
    }
    std::uint64_t u = static_cast<std::uint64_t>(le32(p)) | (static_cast<std::uint64_t>(le32(p + 4)) << 32);
    double d;
    std::memcpy(&d, &u, 8);
    return d;
  }
  switch (bits) {
    case 16:
      return static_cast<std::int16_t>(le16(p)) / 32768.0;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v |= ~0xFFFFFF;
      return v / 8388608.0;
    }
    default:
      return static_cast<std::int32_t>(le32(p)) / 2147483648.0;
  }
}

}  // namespace

MultiChannelAudio read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < 12 || std::memcmp(data, "RIFF", 4) != 0 || std::memcmp(data + 8, "WAVE", 4) != 0)
    throw DataError(path.string() + ": not a RIFF/WAVE file");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  const unsigned char* payload = nullptr;
  std::size_t payload_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = data + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size() && std::memcmp(chunk, "data", 4) != 0)
      throw DataError(path.string() + ": truncated chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw DataError(path.string() + ": short fmt chunk");
      format = le16(data + body);
      channels = le16(data + body + 2);
      rate = le32(data + body + 4);
      bits = le16(data + body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw DataError(path.string() + ": short extensible fmt chunk");
        format = le16(data + body + 24);
      }
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      payload = data + body;
      payload_size = std::min<std::size_t>(size, bytes.size() - body);
    }
    pos = body + size + (size & 1U);
  }
  if (channels == 0 || rate == 0 || payload == nullptr) throw DataError(path.string() + ": missing fmt or data chunk");
  const bool supported = (format == kFormatPcm && (bits == 16 || bits == 24 || bits == 32)) ||
                         (format == kFormatFloat && (bits == 32 || bits == 64));
  if (!supported) throw DataError(path.string() + ": unsupported sample format");

  const std::size_t width = bits / 8;
  const std::size_t frames = payload_size / (width * channels);
  MultiChannelAudio audio;
  audio.rate = rate;
  audio.channels.assign(channels, Eigen::VectorXd(static_cast<Eigen::Index>(frames)));
  for (std::size_t f = 0; f < frames; ++f)
    for (std::uint16_t c = 0; c < channels; ++c)
      audio.channels[c][static_cast<Eigen::Index>(f)] =
          decode_sample(payload + (f * channels + c) * width, format, bits);
  return audio;
}

void write_wav_float(const std::filesystem::path& path, const MultiChannelAudio& audio) {
  if (audio.channels.empty()) throw UsageError("cannot write a WAV file without channels");
  const auto frames = static_cast<std::uint32_t>(audio.channels.front().size());
  for (const auto& ch : audio.channels)
    if (static_cast<std::uint32_t>(ch.size()) != frames) throw UsageError("channel lengths differ");
  const auto channels = static_cast<std::uint16_t>(audio.channels.size());
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.rate));
  const std::uint32_t data_size = frames * channels * 4U;

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write("RIFF", 4);
  put32(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put32(out, 16);
  put16(out, kFormatFloat);
  put16(out, channels);
  put32(out, rate);
  put32(out, rate * channels * 4U);
  put16(out, static_cast<std::uint16_t>(channels * 4U));
  put16(out, 32);
  out.write("data", 4);
  put32(out, data_size);
  for (std::uint32_t f = 0; f < frames; ++f) {
    for (const auto& ch : audio.channels) {
      const float v = static_cast<float>(ch[f]);
      std::uint32_t u;
      std::memcpy(&u, &v, 4);
      put32(out, u);
    }
  }
  if (!out) throw DataError("write failed: " + path.string());
}

Eigen::VectorXd read_csv_samples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      values.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": not a number");
    }
  }
  return Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

MultiChannelAudio read_audio(const std::filesystem::path& path, double csv_rate) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".wav") return read_wav(path);
  if (!(csv_rate > 0.0)) throw DataError(path.string() + ": CSV signals need a rate in the manifest");
  MultiChannelAudio audio;
  audio.rate = csv_rate;
  audio.channels.push_back(read_csv_samples(path));
  return audio;
}

}  // namespace fisher
