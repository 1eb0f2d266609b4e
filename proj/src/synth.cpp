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

#include "fisher/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fisher/csv.hpp"
#include "fisher/wav.hpp"

namespace fisher {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kHeadroom = 0.2;
constexpr double kRingFreq = 3000.0;
constexpr double kRingTau = 0.002;
constexpr double kBurstLo = 3000.0, kBurstHi = 3800.0;
constexpr double kBurstPeriod = 0.25, kBurstLength = 0.08;
constexpr int kBurstComponents = 32;
constexpr std::uint64_t kRecordingTag = 0x5245, kChannelTag = 0x4348;

const FaultType kAllFaults[] = {FaultType::none, FaultType::extra_tone, FaultType::sideband, FaultType::impulse_train,
                                FaultType::hf_burst};

std::string safe_id(const std::string& s) {
  std::string out;
  for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
  return out;
}

std::string padded(int v, int width = 3) {
  std::string s = std::to_string(v);
  return std::string(s.size() < static_cast<std::size_t>(width) ? width - s.size() : 0, '0') + s;
}

std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double real(const std::string& v, const std::string& key) {
  try {
    return parse_double(v, key);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

int integer(const std::string& v, const std::string& key) {
  try {
    return static_cast<int>(parse_int(v, key));
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
}

}  // namespace

std::string fault_name(FaultType fault) {
  switch (fault) {
    case FaultType::none: return "none";
    case FaultType::extra_tone: return "extra_tone";
    case FaultType::sideband: return "sideband";
    case FaultType::impulse_train: return "impulse_train";
    case FaultType::hf_burst: return "hf_burst";
  }
  return "none";
}

FaultType parse_fault(const std::string& name) {
  for (FaultType f : kAllFaults)
    if (fault_name(f) == name) return f;
  throw UsageError("unknown fault type '" + name + "'");
}

void MachineSpec::validate(double t_win) const {
  if (!(rate > 0.0)) throw UsageError("rate must be positive");
  if (!(base_freq > 0.0 && base_freq < rate / 2.0)) throw UsageError("base frequency must lie in (0, rate / 2)");
  if (!(duration >= t_win)) throw UsageError("duration must be at least one STFT window");
  if (harmonics < 1) throw UsageError("at least one harmonic required");
  if (!(harmonic_decay >= 0.0) || !(am_depth >= 0.0) || !(am_rate >= 0.0) || !(noise >= 0.0) ||
      !(intensity >= 0.0) || !(fault_freq >= 0.0))
    throw UsageError("amplitudes and rates must be non-negative");
}

RawSignal gen_signal(const MachineSpec& spec) {
  spec.validate();
  const double cap = 0.45 * spec.rate;
  const auto n = static_cast<Eigen::Index>(std::floor(spec.duration * spec.rate));
  const Eigen::ArrayXd t = Eigen::ArrayXd::LinSpaced(n, 0.0, static_cast<double>(n - 1)) / spec.rate;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> phase(0.0, kTwoPi);
  auto tone = [&](double f) { return (kTwoPi * std::min(f, cap) * t + phase(rng)).sin(); };

  Eigen::ArrayXd x = Eigen::ArrayXd::Zero(n);
  double a = 1.0;
  for (int h = 1; h <= spec.harmonics && h * spec.base_freq < cap; ++h, a *= spec.harmonic_decay)
    x += a * tone(h * spec.base_freq);
  x *= 1.0 + spec.am_depth * (kTwoPi * spec.am_rate * t + phase(rng)).sin();

  const double f0 = spec.base_freq, I = spec.intensity;
  switch (spec.fault) {
    case FaultType::none: break;
    case FaultType::extra_tone: x += I * tone(spec.fault_freq > 0 ? spec.fault_freq : 9.5 * f0); break;
    case FaultType::sideband: {
      const double target = spec.fault_freq > 0 ? spec.fault_freq : 5.0 * f0;
      const double fc = std::max(1.0, std::round(target / f0)) * f0;
      x += 0.5 * I * (tone(fc - f0 / 4.0) + tone(fc + f0 / 4.0));
      break;
    }
    case FaultType::impulse_train: {
      const double prf = spec.fault_freq > 0 ? spec.fault_freq : f0 / 10.0;
      const double ring = std::min(kRingFreq, 0.4 * spec.rate);
      const double period = 1.0 / prf;
      const auto span = static_cast<Eigen::Index>(std::ceil(10.0 * kRingTau * spec.rate));
      for (double t0 = std::uniform_real_distribution<double>(0.0, period)(rng); t0 < spec.duration; t0 += period) {
        const auto i0 = static_cast<Eigen::Index>(std::ceil(t0 * spec.rate));
        for (Eigen::Index i = i0; i < std::min(n, i0 + span); ++i) {
          const double dt = t[i] - t0;
          x[i] += 10.0 * I * std::exp(-dt / kRingTau) * std::sin(kTwoPi * ring * dt);
        }
      }
      break;
    }
    case FaultType::hf_burst: {
      const double hi = std::min(kBurstHi, cap);
      const double lo = std::min(kBurstLo, hi - (kBurstHi - kBurstLo));
      std::uniform_real_distribution<double> band(lo, hi);
      Eigen::ArrayXd noise = Eigen::ArrayXd::Zero(n);
      for (int k = 0; k < kBurstComponents; ++k) noise += tone(band(rng));
      noise *= std::sqrt(2.0 / kBurstComponents);
      const double offset = std::uniform_real_distribution<double>(0.0, kBurstPeriod)(rng);
      Eigen::ArrayXd gate = Eigen::ArrayXd::Zero(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u = std::fmod(t[i] + offset, kBurstPeriod);
        if (u < kBurstLength) gate[i] = 0.5 - 0.5 * std::cos(kTwoPi * u / kBurstLength);
      }
      x += 2.0 * I * gate * noise;
      break;
    }
  }
  if (spec.noise > 0.0) {
    std::normal_distribution<double> g(0.0, spec.noise);
    for (auto& v : x) v += g(rng);
  }
  RawSignal s;
  s.samples = kHeadroom * x.matrix();
  s.rate = spec.rate;
  return s;
}

// ----------------------------------------------------------------- recipes

void CorpusRecipe::validate() const {
  if (name.empty()) throw UsageError("recipe name must be non-empty");
  if (rates.empty()) throw UsageError("recipe needs at least one rate");
  double min_rate = rates.front();
  for (double r : rates) {
    if (!(r > 0.0)) throw UsageError("recipe rates must be positive");
    min_rate = std::min(min_rate, r);
  }
  if (!(base_min > 0.0 && base_min <= base_max)) throw UsageError("recipe base_freq range is empty");
  if (!(base_max < min_rate / 2.0)) throw UsageError("recipe base_freq must stay below every Nyquist frequency");
  if (!(duration > 0.0)) throw UsageError("recipe duration must be positive");
  if (channels < 1) throw UsageError("recipe channels must be at least 1");
  switch (task) {
    case CorpusTask::fault_diagnosis:
      if (classes.size() < 2) throw UsageError("fault diagnosis recipe needs at least two classes");
      if (recordings_per_class < 2)
        throw UsageError("recipe infeasible: every class needs at least two recordings for a sealed split");
      break;
    case CorpusTask::anomaly_detection:
      if (machines < 1 || train_per_machine < 1 || test_normal_per_machine < 1 || test_anomaly_per_machine < 1)
        throw UsageError("anomaly recipe needs machines and train / test clips");
      if (anomaly_faults.empty()) throw UsageError("anomaly recipe needs at least one fault type");
      break;
    case CorpusTask::pretrain:
      if (clips < 1) throw UsageError("pre-training recipe needs clips >= 1");
      break;
  }
}

CorpusRecipe parse_recipe(const KeyValues& values) {
  CorpusRecipe r;
  for (const auto& [key, v] : values) {
    if (key == "name") r.name = v;
    else if (key == "task") {
      if (v == "fd") r.task = CorpusTask::fault_diagnosis;
      else if (v == "ad") r.task = CorpusTask::anomaly_detection;
      else if (v == "pretrain") r.task = CorpusTask::pretrain;
      else throw UsageError("recipe task must be fd, ad or pretrain");
    } else if (key == "modality") r.modality = v;
    else if (key == "seed") r.seed = static_cast<std::uint64_t>(integer(v, key));
    else if (key == "rates") {
      r.rates.clear();
      for (const auto& item : split_list(v)) r.rates.push_back(real(item, key));
    } else if (key == "duration") r.duration = real(v, key);
    else if (key == "channels") r.channels = integer(v, key);
    else if (key == "base_freq") {
      const auto parts = split_list(v, ':');
      if (parts.empty() || parts.size() > 2) throw UsageError("base_freq must be 'f' or 'lo:hi'");
      r.base_min = real(parts[0], key);
      r.base_max = real(parts.back(), key);
    } else if (key == "harmonics") r.harmonics = integer(v, key);
    else if (key == "harmonic_decay") r.harmonic_decay = real(v, key);
    else if (key == "am_depth") r.am_depth = real(v, key);
    else if (key == "am_rate") r.am_rate = real(v, key);
    else if (key == "noise") r.noise = real(v, key);
    else if (key == "recordings_per_class") r.recordings_per_class = integer(v, key);
    else if (key.rfind("class.", 0) == 0) {
      const auto parts = split_list(v, ' ');
      if (parts.empty() || parts.size() > 3) throw UsageError(key + " must be '<fault> [intensity] [freq]'");
      ClassRecipe c;
      c.label = key.substr(6);
      if (c.label.empty()) throw UsageError("empty class label");
      c.fault = parse_fault(parts[0]);
      if (parts.size() > 1) c.intensity = real(parts[1], key);
      if (parts.size() > 2) c.fault_freq = real(parts[2], key);
      r.classes.push_back(c);
    } else if (key == "machines") r.machines = integer(v, key);
    else if (key == "train_per_machine") r.train_per_machine = integer(v, key);
    else if (key == "test_normal_per_machine") r.test_normal_per_machine = integer(v, key);
    else if (key == "test_anomaly_per_machine") r.test_anomaly_per_machine = integer(v, key);
    else if (key == "anomaly_faults") {
      r.anomaly_faults.clear();
      for (const auto& item : split_list(v)) r.anomaly_faults.push_back(parse_fault(item));
    } else if (key == "anomaly_intensity") r.anomaly_intensity = real(v, key);
    else if (key == "clips") r.clips = integer(v, key);
    else if (key == "max_intensity") r.max_intensity = real(v, key);
    else throw UsageError("unknown recipe key '" + key + "'");
  }
  r.validate();
  return r;
}

CorpusRecipe read_recipe(const std::filesystem::path& path) { return parse_recipe(read_key_values(path)); }

std::vector<std::string> builtin_recipe_names() { return {"fd-high", "fd-low", "ad", "pretrain"}; }

CorpusRecipe builtin_recipe(const std::string& name) {
  CorpusRecipe r;
  if (name == "fd-high" || name == "fd-low") {
    const bool high = name == "fd-high";
    r.name = high ? "synth_fd_high" : "synth_fd_low";
    r.seed = high ? 11 : 12;
    r.duration = 20.0;
    r.noise = high ? 0.01 : 0.05;
    const double I = high ? 1.0 : 0.15;
    r.classes = {{"extra_tone", FaultType::extra_tone, I, 0.0},
                 {"hf_burst", FaultType::hf_burst, I, 0.0},
                 {"impulse_train", FaultType::impulse_train, I, 0.0},
                 {"normal", FaultType::none, 0.0, 0.0},
                 {"sideband", FaultType::sideband, I, 0.0}};
    // Half the recordings train; 10 per class at two segments each leaves
    // 2k training segments per class for the default k = 5.
    r.recordings_per_class = 10;
  } else if (name == "ad") {
    r.name = "synth_ad";
    r.task = CorpusTask::anomaly_detection;
    r.modality = "sound";
    r.seed = 13;
    r.duration = 10.0;
  } else if (name == "pretrain") {
    r.name = "synth_pretrain";
    r.task = CorpusTask::pretrain;
    r.modality = "mixed";
    r.seed = 14;
    r.duration = 2.0;
    r.rates = {8000.0, 16000.0, 32000.0, 48000.0};
    r.base_min = 100.0;
    r.base_max = 400.0;
    r.clips = 200;
  } else {
    throw UsageError("unknown built-in recipe '" + name + "' (known: fd-high, fd-low, ad, pretrain)");
  }
  r.validate();
  return r;
}

std::vector<PlannedRecording> plan_corpus(const CorpusRecipe& recipe) {
  recipe.validate();
  std::vector<PlannedRecording> out;
  auto make = [&](int g, const std::string& id, const std::string& label, double base, FaultType fault,
                  double intensity, double fault_freq) {
    PlannedRecording p;
    p.row.path = "audio/" + id + ".wav";
    p.row.dataset = recipe.name;
    p.row.modality = recipe.modality;
    p.row.rate = recipe.rates[static_cast<std::size_t>(g) % recipe.rates.size()];
    p.row.recording_id = id;
    p.row.condition_id = id;
    p.row.channels = recipe.channels;
    p.row.label = label;
    for (int c = 0; c < recipe.channels; ++c) {
      MachineSpec s;
      s.base_freq = base;
      s.harmonics = recipe.harmonics;
      s.harmonic_decay = recipe.harmonic_decay;
      s.am_depth = recipe.am_depth;
      s.am_rate = recipe.am_rate;
      s.noise = recipe.noise;
      s.fault = fault;
      s.intensity = intensity;
      s.fault_freq = fault_freq;
      s.rate = p.row.rate;
      s.duration = recipe.duration;
      s.seed = derive_seed(recipe.seed, {kChannelTag, static_cast<std::uint64_t>(g), static_cast<std::uint64_t>(c)});
      s.validate();
      p.channels.push_back(s);
    }
    return p;
  };
  auto rng_for = [&](int g) { return std::mt19937_64(derive_seed(recipe.seed, {kRecordingTag, static_cast<std::uint64_t>(g)})); };
  switch (recipe.task) {
    case CorpusTask::fault_diagnosis: {
      int g = 0;
      for (const auto& c : recipe.classes)
        for (int j = 0; j < recipe.recordings_per_class; ++j, ++g) {
          auto rng = rng_for(g);
          const double base = std::uniform_real_distribution<double>(recipe.base_min, recipe.base_max)(rng);
          out.push_back(make(g, recipe.name + "_" + safe_id(c.label) + "_" + padded(j), c.label, base, c.fault,
                             c.intensity, c.fault_freq));
        }
      break;
    }
    case CorpusTask::anomaly_detection: {
      // Machine m runs at its own nominal speed across the base range.
      const double span = recipe.base_max - recipe.base_min;
      int g = 0;
      for (int m = 0; m < recipe.machines; ++m) {
        const double centre = recipe.base_min + span * (m + 0.5) / recipe.machines;
        const double jitter = span / (4.0 * recipe.machines);
        const std::string section = padded(m, 2);
        auto add = [&](const std::string& split, int j, bool anomalous) {
          auto rng = rng_for(g);
          const double base = std::uniform_real_distribution<double>(centre - jitter, centre + jitter)(rng);
          const FaultType f = anomalous ? recipe.anomaly_faults[static_cast<std::size_t>(j) % recipe.anomaly_faults.size()]
                                        : FaultType::none;
          const std::string id = recipe.name + "_m" + section + "_" + split + "_" + (anomalous ? "anomaly_" : "normal_") + padded(j);
          auto p = make(g++, id, anomalous ? "anomaly" : "normal", base, f, anomalous ? recipe.anomaly_intensity : 0.0, 0.0);
          p.row.section = section;
          p.row.split = split;
          out.push_back(std::move(p));
        };
        for (int j = 0; j < recipe.train_per_machine; ++j) add("train", j, false);
        for (int j = 0; j < recipe.test_normal_per_machine; ++j) add("test", j, false);
        for (int j = 0; j < recipe.test_anomaly_per_machine; ++j) add("test", j, true);
      }
      break;
    }
    case CorpusTask::pretrain: {
      for (int i = 0; i < recipe.clips; ++i) {
        auto rng = rng_for(i);
        const double base = std::uniform_real_distribution<double>(recipe.base_min, recipe.base_max)(rng);
        const FaultType f = kAllFaults[static_cast<std::size_t>(i) % std::size(kAllFaults)];
        const double intensity =
            f == FaultType::none ? 0.0 : std::uniform_real_distribution<double>(0.0, recipe.max_intensity)(rng);
        out.push_back(make(i, recipe.name + "_" + padded(i, 5), fault_name(f), base, f, intensity, 0.0));
      }
      break;
    }
  }
  return out;
}

CorpusOutput gen_corpus(const CorpusRecipe& recipe, const std::filesystem::path& out_dir, int threads) {
  const auto plan = plan_corpus(recipe);
  CorpusOutput out;
  out.manifest.base_dir = out_dir;
  std::filesystem::create_directories(out_dir / "audio");
  parallel_for(plan.size(), threads, [&](std::size_t i) {
    MultiChannelAudio audio;
    audio.rate = plan[i].row.rate;
    for (const auto& spec : plan[i].channels) audio.channels.push_back(gen_signal(spec).samples);
    write_wav_float(out_dir / plan[i].row.path, audio);
  });
  for (const auto& p : plan) out.manifest.rows.push_back(p.row);
  auto& labels = out.classes[recipe.name];
  switch (recipe.task) {
    case CorpusTask::fault_diagnosis:
      for (const auto& c : recipe.classes) labels.push_back(c.label);
      break;
    case CorpusTask::anomaly_detection: labels = {"normal", "anomaly"}; break;
    case CorpusTask::pretrain:
      for (FaultType f : kAllFaults) labels.push_back(fault_name(f));
      break;
  }
  validate_manifest(out.manifest, &out.classes);
  write_manifest(out_dir / "manifest.csv", out.manifest);
  write_class_sets(out_dir / "classes.csv", out.classes);
  return out;
}

}  // namespace fisher
