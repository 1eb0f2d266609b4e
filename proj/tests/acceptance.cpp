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

// Acceptance suite: one PASS/FAIL line per criterion. A criterion passes
// only when its check holds and it finishes inside its time budget.
// Tolerances and budgets are pinned below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numbers>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fisher/cli.hpp"
#include "fisher/csv.hpp"
#include "fisher/harness.hpp"
#include "fisher/knn.hpp"
#include "fisher/masking.hpp"
#include "fisher/model.hpp"
#include "fisher/signal.hpp"
#include "fisher/synth.hpp"
#include "fisher/trainer.hpp"

using namespace fisher;
namespace fs = std::filesystem;

namespace {

constexpr double kResolutionRelTol = 1e-9;
constexpr double kRateInvarianceRelTol = 0.05;
constexpr double kGradRelTol = 1e-3;
constexpr double kEmaAbsTol = 4 * std::numeric_limits<double>::epsilon();
constexpr double kMaskRatio = 0.8;
constexpr int kMinMaskGrids = 200;
constexpr int kOracleInstances = 100;
constexpr double kAreaTol = 1e-12;
constexpr int kLossWindow = 20;
constexpr double kChanceMultiple = 3.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  double budget_seconds;
  std::function<Outcome()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("fisher_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

RawSignal tones(const std::vector<std::pair<double, double>>& parts, double rate, double seconds) {
  RawSignal s;
  s.rate = rate;
  s.samples = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(std::floor(seconds * rate)));
  for (Eigen::Index i = 0; i < s.samples.size(); ++i) {
    const double t = static_cast<double>(i) / rate;
    double phase = 0.3;
    for (const auto& [f, a] : parts) {
      s.samples[i] += a * std::sin(2.0 * std::numbers::pi * f * t + phase);
      phase += 0.9;
    }
  }
  return s;
}

RawSignal noise(double rate, double seconds, std::uint64_t seed) {
  RawSignal s;
  s.rate = rate;
  s.samples.resize(static_cast<Eigen::Index>(std::floor(seconds * rate)));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.1);
  for (auto& v : s.samples) v = g(rng);
  return s;
}

template <class P>
void jitter(P& params, std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, scale);
  visit_encoder([&](const std::string&, auto& t) { t = t.unaryExpr([&](double v) { return v + g(rng); }); }, params);
}

ModelConfig gradcheck_config() {
  ModelConfig c;
  c.depth = 2;
  c.hidden = 16;
  c.heads = 2;
  c.patch = 4;
  return c;
}

std::vector<SliceJob> gradcheck_jobs(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<SliceJob> jobs;
  for (int s = 0; s < 3; ++s) {
    MatD band(8, 12);
    for (auto& v : band.reshaped()) v = g(rng);
    SliceJob job;
    job.grid = patchify(band, 4);
    job.plan = make_inverse_block_mask(job.grid.dims, 0.5, seed + s);
    job.noise_seed = seed * 31 + s;
    jobs.push_back(std::move(job));
  }
  return jobs;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// ------------------------------------------------------------ criteria

Outcome frequency_resolution() {
  const StftConfig cfg;
  double worst = 0.0;
  for (double rate : {8000.0, 16000.0, 32000.0, 48000.0}) {
    const auto spec = stft_logmag(noise(rate, 0.1, 1), cfg);
    worst = std::max(worst, std::abs(spec.bin_spacing - 40.0) / 40.0);
    // Realized spacing from the window length in samples.
    worst = std::max(worst, std::abs(rate / spec.window_length - 40.0) / 40.0);
  }
  return {worst <= kResolutionRelTol, "max relative deviation from 40 Hz " + fmt("%.3g", worst)};
}

Outcome rate_invariance() {
  const StftConfig cfg;
  const std::vector<std::pair<double, double>> parts{{310, 0.5}, {1170, 0.3}, {2210, 0.2}, {3330, 0.25}};
  const auto a = split_subbands(stft_logmag(tones(parts, 16000, 1.0), cfg), cfg).slices[0];
  const auto b = split_subbands(stft_logmag(tones(parts, 32000, 1.0), cfg), cfg).slices[0];
  if (a.rows() != b.rows() || a.cols() != b.cols()) return {false, "band shapes differ"};
  const Eigen::ArrayXXd ma = a.array().exp(), mb = b.array().exp();
  const double floor = 1e-3 * ma.maxCoeff();
  double worst = 0.0;
  int compared = 0;
  for (Eigen::Index i = 0; i < ma.rows(); ++i)
    for (Eigen::Index j = 0; j < ma.cols(); ++j)
      if (ma(i, j) > floor) {
        worst = std::max(worst, std::abs(ma(i, j) - mb(i, j)) / ma(i, j));
        ++compared;
      }
  return {compared > 0 && worst < kRateInvarianceRelTol,
          std::to_string(compared) + " above-floor bins, max relative difference " + fmt("%.4f", worst)};
}

Outcome subband_counting() {
  StftConfig stft;
  stft.f_base = 4000.0;
  const ModelConfig model;
  const auto state = init_params<double>(model, 3);
  const int n16 = subband_count_for_rate(16000, stft), n32 = subband_count_for_rate(32000, stft);
  const auto d16 = embed_segment(noise(16000, 0.5, 2), state, stft).size();
  const auto d32 = embed_segment(noise(32000, 0.5, 2), state, stft).size();
  const int D = model.hidden;
  const bool ok = n16 == 2 && n32 == 4 && d16 == 2 * D && d32 == 4 * D;
  return {ok, "16 kHz: n=" + std::to_string(n16) + " dim=" + std::to_string(d16) + "; 32 kHz: n=" +
                  std::to_string(n32) + " dim=" + std::to_string(d32) + " (D=" + std::to_string(D) + ")"};
}

Outcome gradient_check() {
  const ModelConfig c = gradcheck_config();
  ModelState<double> s = init_params<double>(c, 17);
  jitter(s.student, 1, 0.05);
  s.teacher = s.student;
  jitter(s.teacher, 2, 0.2);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.05);
  visit_decoder([&](const std::string&, auto& t) { t = t.unaryExpr([&](double v) { return v + g(rng); }); },
                s.decoder);
  const auto jobs = gradcheck_jobs(9);
  const ForwardBackward fb = forward_backward(jobs, s);
  StudentGrads<double> params{s.student, s.decoder};
  auto loss_at = [&]() {
    ModelState<double> probe = s;
    probe.student = params.encoder;
    probe.decoder = params.decoder;
    return forward_loss(jobs, probe).total;
  };
  const double h = 1e-4;
  double worst = 0.0;
  std::string worst_name;
  std::int64_t checked = 0;
  visit_student(
      [&](const std::string& name, auto& p, const auto& analytic) {
        for (Eigen::Index i = 0; i < p.size(); ++i) {
          const double orig = p.data()[i];
          p.data()[i] = orig + h;
          const double up = loss_at();
          p.data()[i] = orig - h;
          const double down = loss_at();
          p.data()[i] = orig;
          const double numeric = (up - down) / (2 * h), a = analytic.data()[i];
          const double e = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
          if (e > worst) {
            worst = e;
            worst_name = name;
          }
          ++checked;
        }
      },
      params, fb.grads);
  const std::int64_t expected = encoder_parameter_count(c) + decoder_parameter_count(c);
  return {checked == expected && worst < kGradRelTol,
          std::to_string(checked) + " parameters, max relative error " + fmt("%.3g", worst) + " at " + worst_name};
}

Outcome ema_and_stop_gradient() {
  ModelState<double> s = init_params<double>(gradcheck_config(), 7);
  jitter(s.teacher, 3, 0.1);
  const auto before = s;
  const double tau = 0.999;
  ema_update(s, tau);
  double worst = 0.0;
  visit_encoder(
      [&](const std::string&, const auto& t, const auto& t0, const auto& stu) {
        worst = std::max(worst, (t - (tau * t0 + (1.0 - tau) * stu)).cwiseAbs().maxCoeff());
      },
      s.teacher, before.teacher, before.student);
  const ForwardBackward fb = forward_backward(gradcheck_jobs(2), s);
  bool zero = true;
  visit_encoder([&](const std::string&, const auto& t) { zero &= (t.array() == 0.0).all(); }, fb.teacher_grads);
  // The loss depends on the teacher, so the zero gradient is a stop-gradient.
  ModelState<double> moved = s;
  moved.teacher.blocks[0].fc1.weight(0, 0) += 0.5;
  const bool depends = forward_loss(gradcheck_jobs(2), moved).total != forward_loss(gradcheck_jobs(2), s).total;
  return {worst <= kEmaAbsTol && zero && depends, "max EMA deviation " + fmt("%.3g", worst) +
                                                      (zero ? ", teacher gradients all zero" : ", teacher gradient nonzero")};
}

bool in_rect(const Rect& r, int i, int j) { return i >= r.top && i < r.top + r.rows && j >= r.left && j < r.left + r.cols; }

Outcome masking_exactness() {
  std::mt19937_64 rng(2024);
  int grids = 0, failures = 0;
  while (grids < 2 * kMinMaskGrids) {
    const int rows = 1 + static_cast<int>(rng() % 64), cols = 1 + static_cast<int>(rng() % 16);
    const int P = rows * cols;
    if (P < 5) continue;
    ++grids;
    const MaskPlan p = make_inverse_block_mask({rows, cols}, kMaskRatio, rng());
    const int expected = static_cast<int>(std::floor(kMaskRatio * P + 0.5));
    const int masked = static_cast<int>(std::count(p.keep.begin(), p.keep.end(), 0));
    bool ok = masked == expected && p.masked_count == expected;
    // Kept cells are exactly the block plus the boundary strip, two rectangles.
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j)
        ok &= static_cast<bool>(p.keep[i * cols + j]) == (in_rect(p.block, i, j) || in_rect(p.strip, i, j));
    ok &= p.block.area() + p.strip.area() == P - masked;
    failures += !ok;
  }
  int cap_violations = 0, cap_cases = 0;
  for (int t = 0; t < 100; ++t) {
    const int slices = 1 + static_cast<int>(rng() % 12), clones = 1 + static_cast<int>(rng() % 16);
    const int cap = slices + static_cast<int>(rng() % 40);
    SubBandBatch bands;
    for (int i = 0; i < slices; ++i) {
      bands.slices.push_back(MatD::Constant(64, 100, i));
      bands.origin.push_back({i, 0});
    }
    const auto batch = clone_with_masks(bands, clones, cap, kMaskRatio, 16, rng());
    cap_violations += static_cast<int>(batch.plans.size()) > cap || batch.bands.size() != batch.plans.size();
    ++cap_cases;
  }
  return {grids >= kMinMaskGrids && failures == 0 && cap_violations == 0,
          std::to_string(grids) + " grids, " + std::to_string(failures) + " mask failures; " +
              std::to_string(cap_cases) + " clone batches, " + std::to_string(cap_violations) + " cap violations"};
}

Outcome training_dynamics() {
  const auto dir = scratch("training");
  const auto corpus_out = gen_corpus(builtin_recipe("pretrain"), dir / "corpus", 1);
  std::vector<RawSignal> corpus;
  for (auto& s : segment_corpus(corpus_out.manifest)) corpus.push_back(std::move(s.signal));
  const RunConfig cfg = resolve_config("desk-tiny", "", {"train.seed=0"});
  std::vector<TrainLoopResult> runs;
  std::vector<fs::path> outs{dir / "a", dir / "b"};
  for (const auto& out : outs) {
    auto state = init_params<double>(cfg.model, cfg.train.seed);
    auto opt = make_optimizer_state(state);
    runs.push_back(train_loop(corpus, state, opt, cfg.train, cfg.stft, out, nullptr));
  }
  std::vector<double> loss;
  for (const auto& r : runs[0].log) loss.push_back(r.loss.total);
  if (loss.size() < 2 * kLossWindow) return {false, "too few steps logged"};
  const double first = median({loss.begin(), loss.begin() + kLossWindow});
  const double last = median({loss.end() - kLossWindow, loss.end()});
  bool same = read_text_file(runs[0].loss_log) == read_text_file(runs[1].loss_log) &&
              runs[0].checkpoints.size() == runs[1].checkpoints.size();
  for (std::size_t i = 0; same && i < runs[0].checkpoints.size(); ++i)
    same = read_text_file(runs[0].checkpoints[i]) == read_text_file(runs[1].checkpoints[i]);
  return {last < first && same, std::to_string(loss.size()) + " steps on " + std::to_string(corpus.size()) +
                                    " segments, median loss first 20 " + fmt("%.4f", first) + " last 20 " +
                                    fmt("%.4f", last) + (same ? ", rerun byte-identical" : ", rerun differs")};
}

double pair_auc(const std::vector<double>& n, const std::vector<double>& a) {
  double wins = 0;
  for (double x : n)
    for (double y : a) wins += y > x ? 1.0 : (y == x ? 0.5 : 0.0);
  return wins / (static_cast<double>(n.size()) * static_cast<double>(a.size()));
}

double naive_cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return 1.0 - a.dot(b) / std::sqrt(a.squaredNorm() * b.squaredNorm());
}

Outcome knn_auc_oracles() {
  std::mt19937_64 rng(77);
  std::normal_distribution<double> g;
  int auc_bad = 0, knn_bad = 0;
  for (int inst = 0; inst < kOracleInstances; ++inst) {
    const int nn = 1 + static_cast<int>(rng() % 100), na = 1 + static_cast<int>(rng() % 100);
    std::uniform_int_distribution<int> level(0, inst % 2 ? 10 : 100000);
    std::vector<double> n(nn), a(na);
    for (auto& v : n) v = level(rng) / 10.0;
    for (auto& v : a) v = (level(rng) + 2) / 10.0;
    auc_bad += auc(n, a) != pair_auc(n, a);
  }
  for (int inst = 0; inst < kOracleInstances; ++inst) {
    const int n = 1 + static_cast<int>(rng() % 200), d = 1 + static_cast<int>(rng() % 12);
    const int k = 1 + static_cast<int>(rng() % std::min(n, 9));
    MatD bank(n, d);
    for (auto& v : bank.reshaped()) v = std::round(g(rng) * 2) / 2;
    for (int i = 0; i < n; ++i)
      if (bank.row(i).squaredNorm() == 0) bank(i, 0) = 1;
    Eigen::VectorXd q(d);
    for (auto& v : q) v = g(rng);
    // Exhaustive distances, ties broken by bank index.
    std::vector<std::pair<double, Eigen::Index>> all;
    for (Eigen::Index i = 0; i < n; ++i) all.push_back({cosine_distance(q, bank.row(i).transpose()), i});
    std::sort(all.begin(), all.end());
    const auto got = knn_search(q, bank, k);
    bool ok = got.size() == static_cast<std::size_t>(k);
    for (int i = 0; ok && i < k; ++i) {
      ok = got[i].index == all[i].second && got[i].distance == all[i].first;
      ok &= std::abs(all[i].first - naive_cosine(q, bank.row(all[i].second).transpose())) < 1e-12;
    }
    knn_bad += !ok;
  }
  return {auc_bad == 0 && knn_bad == 0, std::to_string(kOracleInstances) + " AUC instances (" +
                                            std::to_string(auc_bad) + " mismatches), " +
                                            std::to_string(kOracleInstances) + " KNN instances (" +
                                            std::to_string(knn_bad) + " mismatches)"};
}

DatasetScore score(const std::string& name, Task task, double mean) {
  DatasetScore d;
  d.name = name;
  d.task = task;
  d.scores = {mean};
  d.mean = mean;
  return d;
}

Outcome aggregation_fixture() {
  struct Row {
    const char* model;
    double ad, fd;
    long expected;  // hundredths
  };
  const Row rows[] = {{"small", 61.69, 63.31, 6250}, {"tiny", 59.65, 63.11, 6138}};
  bool ok = true;
  std::string detail;
  for (const auto& r : rows) {
    const auto rep = aggregate({score("ad", Task::anomaly_detection, r.ad), score("fd", Task::fault_diagnosis, r.fd)},
                               r.model);
    const long got = std::lround(*rep.overall * 100.0);
    ok &= got == r.expected;
    detail += std::string(detail.empty() ? "" : ", ") + r.model + " " + fmt("%.2f", *rep.overall);
  }
  return {ok, detail};
}

Outcome sealed_split_property() {
  const auto plan = plan_corpus(builtin_recipe("fd-high"));
  const auto recipe = builtin_recipe("fd-high");
  const int segments = static_cast<int>(std::floor(recipe.duration / kSegmentSeconds));
  std::vector<std::string> group, label;
  for (const auto& p : plan)
    for (int c = 0; c < static_cast<int>(p.channels.size()); ++c)
      for (int s = 0; s < segments; ++s) {
        group.push_back(p.row.recording_id);
        label.push_back(p.row.label);
      }
  const std::set<std::string> classes(label.begin(), label.end()), groups(group.begin(), group.end());
  std::map<std::string, std::string> class_of;
  for (std::size_t i = 0; i < group.size(); ++i) class_of[group[i]] = label[i];
  int feasible = 0, violations = 0, plans = 0;
  for (double ratio : sweep_ratios())
    for (std::uint64_t seed = 0; seed < kEvaluationSeeds; ++seed) {
      ++plans;
      const auto split = try_sealed_split(group, label, ratio, seed);
      if (!split) continue;
      ++feasible;
      const std::set<std::string> tr(split->train_groups.begin(), split->train_groups.end());
      const std::set<std::string> te(split->test_groups.begin(), split->test_groups.end());
      std::set<std::string> both, ctr, cte;
      std::set_intersection(tr.begin(), tr.end(), te.begin(), te.end(), std::inserter(both, both.end()));
      for (const auto& gname : tr) ctr.insert(class_of[gname]);
      for (const auto& gname : te) cte.insert(class_of[gname]);
      std::set<std::string> all = tr;
      all.insert(te.begin(), te.end());
      violations += !both.empty() || all != groups || ctr != classes || cte != classes;
    }
  return {feasible > 0 && violations == 0, std::to_string(plans) + " plans over " + std::to_string(groups.size()) +
                                               " groups, " + std::to_string(feasible) + " feasible, " +
                                               std::to_string(violations) + " violations"};
}

Outcome multi_split_area() {
  const auto x = sweep_ratios();
  const std::vector<double> constant(x.size(), 70.0);
  std::vector<double> linear;
  for (double r : x) linear.push_back(40.0 + 30.0 * r);
  const double mid = 40.0 + 30.0 * 0.5 * (x.front() + x.back());
  const double e1 = std::abs(trapezoid_area(x, constant) - 70.0), e2 = std::abs(trapezoid_area(x, linear) - mid);
  return {e1 <= kAreaTol && e2 <= kAreaTol, "constant error " + fmt("%.3g", e1) + ", linear error " + fmt("%.3g", e2)};
}

int cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome end_to_end_separability() {
  const auto dir = scratch("end_to_end");
  const auto s = [&](const char* p) { return (dir / p).string(); };
  if (cli({"synth", "--builtin", "pretrain", "--out", s("pre")}) != 0) return {false, "synth pretrain failed"};
  if (cli({"synth", "--builtin", "fd-high", "--out", s("fd")}) != 0) return {false, "synth fd-high failed"};
  if (cli({"train", "--manifest", s("pre/manifest.csv"), "--preset", "desk-tiny", "--seed", "0", "--out", s("run")}) != 0)
    return {false, "train failed"};
  const RunConfig cfg = resolve_config("desk-tiny", "", {});
  const auto ckpt = checkpoint_path(dir / "run", cfg.train.steps).string();
  if (cli({"embed", "--checkpoint", ckpt, "--manifest", s("fd/manifest.csv"), "--out", s("emb")}) != 0)
    return {false, "embed failed"};
  if (cli({"eval-fd", "--embeddings", s("emb/embeddings.fshe"), "--out", s("eval")}) != 0)
    return {false, "eval-fd failed"};
  const auto report = parse_report_json(read_text_file(dir / "eval" / "report.json"));
  const auto classes = read_class_sets(dir / "fd" / "classes.csv").begin()->second.size();
  const double chance = 100.0 / static_cast<double>(classes);
  const double accuracy = report.datasets.at(0).mean;
  return {accuracy >= kChanceMultiple * chance, "macro accuracy " + fmt("%.2f", accuracy) + "% over " +
                                                    std::to_string(classes) + " classes, threshold " +
                                                    fmt("%.2f", kChanceMultiple * chance) + "%"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> criteria{
      {1, "frequency-resolution law", 1.0, frequency_resolution},
      {2, "sub-band rate invariance", 5.0, rate_invariance},
      {3, "sub-band counting", 5.0, subband_counting},
      {4, "loss gradient check", 60.0, gradient_check},
      {5, "EMA and stop-gradient", 5.0, ema_and_stop_gradient},
      {6, "masking exactness", 30.0, masking_exactness},
      {7, "training dynamics", 600.0, training_dynamics},
      {8, "KNN and AUC oracles", 30.0, knn_auc_oracles},
      {9, "aggregation fixture", 1.0, aggregation_fixture},
      {10, "sealed-split property", 60.0, sealed_split_property},
      {11, "multi-split area", 1.0, multi_split_area},
      {12, "end-to-end separability", 900.0, end_to_end_separability},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.budget_seconds;
    failed += !pass;
    std::printf("%s %2d %-26s %8.2f s / %4.0f s  %s%s\n", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                c.budget_seconds, o.detail.c_str(), o.pass && !pass ? " (over budget)" : "");
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
