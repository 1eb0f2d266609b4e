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

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "fisher/harness.hpp"
#include "fisher/knn.hpp"
#include "fisher/synth.hpp"
#include "test_support.hpp"

using namespace fisher;

namespace {

double kurtosis(const Eigen::VectorXd& x) {
  const double m = x.mean();
  const Eigen::ArrayXd d = x.array() - m;
  const double v = d.square().mean();
  return d.pow(4).mean() / (v * v);
}

// Centroid (Hz) of the time-averaged linear magnitude spectrum.
double spectral_centroid(const RawSignal& s) {
  const auto spec = stft_logmag(s, StftConfig{});
  const Eigen::RowVectorXd mag = spec.values.array().exp().colwise().mean();
  double num = 0.0;
  for (Eigen::Index b = 0; b < mag.size(); ++b) num += static_cast<double>(b) * spec.bin_spacing * mag[b];
  return num / mag.sum();
}

std::map<std::string, int> label_counts(const std::vector<PlannedRecording>& plan) {
  std::map<std::string, int> c;
  for (const auto& p : plan) ++c[p.row.label];
  return c;
}

}  // namespace

TEST_CASE("clean machine spectrum peaks only at harmonics") {
  MachineSpec s;
  s.base_freq = 200.0;
  s.noise = 0.0;
  s.seed = 4;
  const auto spec = stft_logmag(gen_signal(s), StftConfig{});
  const Eigen::RowVectorXd mean = spec.values.colwise().mean();
  const int fundamental = static_cast<int>(std::lround(s.base_freq / spec.bin_spacing));
  Eigen::Index top = 0;
  mean.maxCoeff(&top);
  CHECK(top == fundamental);
  int peaks = 0;
  for (Eigen::Index b = 1; b + 1 < mean.size(); ++b) {
    if (mean[b] <= mean[b - 1] || mean[b] <= mean[b + 1] || mean[b] < mean.maxCoeff() - 6.0) continue;
    ++peaks;
    CHECK(b % fundamental == 0);
  }
  CHECK(peaks == s.harmonics);
}

TEST_CASE("impulse faults raise kurtosis") {
  MachineSpec healthy;
  healthy.seed = 9;
  MachineSpec faulty = healthy;
  faulty.fault = FaultType::impulse_train;
  faulty.intensity = 0.5;
  CHECK(kurtosis(gen_signal(faulty).samples) > kurtosis(gen_signal(healthy).samples));
}

TEST_CASE("generation is deterministic and every fault type is valid") {
  for (const auto f : {FaultType::none, FaultType::extra_tone, FaultType::sideband, FaultType::impulse_train,
                       FaultType::hf_burst}) {
    for (double rate : {8000.0, 16000.0, 32000.0, 48000.0}) {
      MachineSpec s;
      s.fault = f;
      s.intensity = 0.7;
      s.rate = rate;
      s.duration = 0.5;
      s.seed = 17;
      const auto a = gen_signal(s);
      const auto b = gen_signal(s);
      CHECK(a.samples == b.samples);
      CHECK(a.rate == rate);
      CHECK(a.size() == static_cast<Eigen::Index>(rate / 2));
      CHECK_NOTHROW(a.validate());
    }
    CHECK(parse_fault(fault_name(f)) == f);
  }
  MachineSpec s;
  s.seed = 1;
  MachineSpec t = s;
  t.seed = 2;
  CHECK(gen_signal(s).samples != gen_signal(t).samples);
}

TEST_CASE("machine spec validation") {
  MachineSpec s;
  s.base_freq = 9000.0;
  CHECK_THROWS_AS(gen_signal(s), UsageError);
  s = MachineSpec{};
  s.duration = 0.01;
  CHECK_THROWS_AS(gen_signal(s), UsageError);
  s = MachineSpec{};
  s.noise = -1.0;
  CHECK_THROWS_AS(gen_signal(s), UsageError);
  CHECK_THROWS_AS(parse_fault("rust"), UsageError);
}

TEST_CASE("recipe class counts, rate mix and protocol") {
  KeyValues kv{{"name", "fd4"},        {"rates", "16000, 32000"},       {"recordings_per_class", "10"},
               {"duration", "1"},      {"class.a", "none"},             {"class.b", "extra_tone 0.5"},
               {"class.c", "sideband 0.5 800"}, {"class.d", "hf_burst 1"}};
  const auto recipe = parse_recipe(kv);
  const auto plan = plan_corpus(recipe);
  CHECK(plan.size() == 40);
  for (const auto& [label, n] : label_counts(plan)) CHECK(n == 10);
  std::map<double, int> rates;
  for (const auto& p : plan) ++rates[p.row.rate];
  CHECK(rates == std::map<double, int>{{16000.0, 20}, {32000.0, 20}});
  CHECK(recipe.classes[2].fault_freq == 800.0);

  auto ad = builtin_recipe("ad");
  ad.duration = 1.0;
  const auto ad_plan = plan_corpus(ad);
  std::set<std::string> sections;
  int test_anomalies = 0;
  for (const auto& p : ad_plan) {
    if (p.row.split == "train") CHECK(p.row.label == "normal");
    if (p.row.split == "test" && p.row.label == "anomaly") ++test_anomalies;
    sections.insert(p.row.section);
  }
  CHECK(test_anomalies == ad.machines * ad.test_anomaly_per_machine);
  CHECK(sections.size() == static_cast<std::size_t>(ad.machines));

  kv["recordings_per_class"] = "1";
  CHECK_THROWS_AS(parse_recipe(kv), UsageError);
  CHECK_THROWS_AS(parse_recipe({{"bogus", "1"}}), UsageError);
  CHECK_THROWS_AS(parse_recipe({{"class.a", "none"}, {"class.b", "none"}, {"base_freq", "5000"}, {"rates", "8000"}}),
                  UsageError);
  for (const auto& n : builtin_recipe_names()) CHECK_NOTHROW(builtin_recipe(n));
}

TEST_CASE("corpus files round-trip through the harness") {
  const auto dir = testing::scratch_dir("synth_corpus");
  auto recipe = builtin_recipe("pretrain");
  recipe.clips = 8;
  recipe.channels = 2;
  const auto out = gen_corpus(recipe, dir, 2);
  const auto manifest = read_manifest(dir / "manifest.csv");
  CHECK(manifest.rows == out.manifest.rows);
  CHECK(read_class_sets(dir / "classes.csv") == out.classes);
  const auto segs = segment_corpus(manifest);
  CHECK(segs.size() == 16);
  for (const auto& s : segs) CHECK(s.signal.rate == manifest.rows[s.row].rate);
  // Float WAV keeps samples exactly up to float precision.
  const auto plan = plan_corpus(recipe);
  const auto ref = gen_signal(plan[3].channels[1]).samples;
  const auto& back = segs[7].signal.samples;
  REQUIRE(back.size() == ref.size());
  CHECK((back - ref.cast<float>().cast<double>()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("high-intensity diagnosis corpus is centroid separable") {
  const auto recipe = builtin_recipe("fd-high");
  const auto plan = plan_corpus(recipe);
  std::vector<double> centroid;
  std::vector<std::string> group, label;
  for (const auto& p : plan) {
    MultiChannelAudio audio;
    audio.rate = p.row.rate;
    for (const auto& spec : p.channels) audio.channels.push_back(gen_signal(spec).samples);
    for (const auto& seg : cut_segments(audio)) {
      centroid.push_back(spectral_centroid(seg));
      group.push_back(p.row.recording_id);
      label.push_back(p.row.label);
    }
  }
  double total = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto plan_split = sealed_split(group, label, 0.5, seed);
    const std::set<std::string> train(plan_split.train_groups.begin(), plan_split.train_groups.end());
    std::vector<std::string> pred, truth;
    for (std::size_t i = 0; i < centroid.size(); ++i) {
      if (train.count(group[i])) continue;
      std::size_t best = 0;
      double best_d = INFINITY;
      for (std::size_t j = 0; j < centroid.size(); ++j)
        if (train.count(group[j]) && std::abs(centroid[i] - centroid[j]) < best_d) {
          best_d = std::abs(centroid[i] - centroid[j]);
          best = j;
        }
      pred.push_back(label[best]);
      truth.push_back(label[i]);
    }
    total += macro_accuracy(pred, truth);
  }
  MESSAGE("centroid 1-NN macro accuracy: " << total / 10.0);
  CHECK(total / 10.0 > 0.9);
}

TEST_CASE("shipped recipe files match the built-ins") {
  const std::filesystem::path dir = std::filesystem::path(FISHER_SOURCE_DIR) / "configs" / "recipes";
  for (const auto& name : builtin_recipe_names()) {
    CAPTURE(name);
    const auto from_file = plan_corpus(read_recipe(dir / (name + ".txt")));
    const auto builtin = plan_corpus(builtin_recipe(name));
    REQUIRE(from_file.size() == builtin.size());
    bool same = true;
    for (std::size_t i = 0; i < builtin.size(); ++i) {
      same &= from_file[i].row == builtin[i].row && from_file[i].channels.size() == builtin[i].channels.size();
      for (std::size_t c = 0; same && c < builtin[i].channels.size(); ++c) {
        const auto& a = from_file[i].channels[c];
        const auto& b = builtin[i].channels[c];
        same &= a.base_freq == b.base_freq && a.fault == b.fault && a.intensity == b.intensity && a.seed == b.seed &&
                a.rate == b.rate && a.noise == b.noise && a.duration == b.duration;
      }
    }
    CHECK(same);
  }
}
