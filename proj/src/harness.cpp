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

#include "fisher/harness.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "fisher/csv.hpp"

namespace fisher {

namespace {

using Json = nlohmann::ordered_json;

constexpr std::uint64_t kSplitTag = 0x5350;
constexpr int kSplitDraws = 64;

std::string* column(ManifestRow& r, const std::string& name) {
  if (name == "path") return &r.path;
  if (name == "dataset") return &r.dataset;
  if (name == "modality") return &r.modality;
  if (name == "recording_id") return &r.recording_id;
  if (name == "condition_id") return &r.condition_id;
  if (name == "label") return &r.label;
  if (name == "section") return &r.section;
  if (name == "domain") return &r.domain;
  if (name == "split") return &r.split;
  if (name == "subset") return &r.subset;
  return nullptr;
}

bool starts_with_ci(const std::string& s, const std::string& prefix) {
  if (s.size() < prefix.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i)
    if (std::tolower(static_cast<unsigned char>(s[i])) != std::tolower(static_cast<unsigned char>(prefix[i])))
      return false;
  return true;
}

bool is_anomaly_label(const std::string& label) { return label == "anomaly"; }

std::vector<std::string> sorted_labels(std::span<const EmbeddingRecord> records) {
  std::set<std::string> s;
  for (const auto& r : records) s.insert(r.label);
  return {s.begin(), s.end()};
}

bool has_official_split(std::span<const EmbeddingRecord> records) {
  return std::any_of(records.begin(), records.end(), [](const auto& r) { return !r.split.empty(); });
}

Eigen::VectorXd widen(const Eigen::VectorXf& v) { return v.cast<double>(); }

}  // namespace

// ---------------------------------------------------------------- manifest

std::filesystem::path Manifest::resolve(const ManifestRow& row) const {
  const std::filesystem::path p(row.path);
  return p.is_absolute() ? p : base_dir / p;
}

const std::vector<std::string>& manifest_columns() {
  static const std::vector<std::string> cols{"path",         "dataset",  "modality", "rate",
                                             "recording_id", "condition_id", "channels", "label",
                                             "section",      "domain",   "split",    "subset"};
  return cols;
}

Manifest read_manifest(const std::filesystem::path& path) {
  const auto rows = parse_csv(read_text_file(path));
  if (rows.empty()) throw DataError(path.string() + ": empty manifest");
  const CsvRow& header = rows.front();
  for (const char* req : {"path", "dataset", "rate", "recording_id", "label"})
    if (std::find(header.begin(), header.end(), req) == header.end())
      throw DataError(path.string() + ": manifest lacks column '" + req + "'");
  Manifest m;
  m.base_dir = path.parent_path();
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const CsvRow& cells = rows[i];
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    if (cells.size() != header.size()) throw DataError(where + ": expected " + std::to_string(header.size()) + " fields");
    ManifestRow r;
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == "rate") {
        r.rate = parse_double(cells[c], where + " rate");
      } else if (header[c] == "channels") {
        r.channels = cells[c].empty() ? 1 : static_cast<int>(parse_int(cells[c], where + " channels"));
      } else if (std::string* f = column(r, header[c])) {
        *f = cells[c];
      }
    }
    m.rows.push_back(std::move(r));
  }
  return m;
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  std::string out = csv_line(manifest_columns());
  for (ManifestRow r : manifest.rows) {
    CsvRow cells;
    for (const auto& name : manifest_columns()) {
      if (name == "rate") cells.push_back(format_double(r.rate));
      else if (name == "channels") cells.push_back(std::to_string(r.channels));
      else cells.push_back(*column(r, name));
    }
    out += csv_line(cells);
  }
  write_text_file(path, out);
}

ClassSets read_class_sets(const std::filesystem::path& path) {
  const auto rows = parse_csv(read_text_file(path));
  if (rows.empty() || rows.front() != CsvRow{"dataset", "class"})
    throw DataError(path.string() + ": class set file must start with header 'dataset,class'");
  ClassSets sets;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2) throw DataError(path.string() + ":" + std::to_string(i + 1) + ": expected 2 fields");
    auto& v = sets[rows[i][0]];
    if (std::find(v.begin(), v.end(), rows[i][1]) != v.end())
      throw DataError(path.string() + ": duplicate class '" + rows[i][1] + "'");
    v.push_back(rows[i][1]);
  }
  return sets;
}

void write_class_sets(const std::filesystem::path& path, const ClassSets& classes) {
  std::string out = csv_line({"dataset", "class"});
  for (const auto& [dataset, labels] : classes)
    for (const auto& l : labels) out += csv_line({dataset, l});
  write_text_file(path, out);
}

void validate_manifest(const Manifest& manifest, const ClassSets* classes) {
  std::set<std::pair<std::string, std::string>> paths, recordings;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto& r = manifest.rows[i];
    const std::string where = "manifest row " + std::to_string(i + 1);
    if (r.path.empty() || r.dataset.empty() || r.recording_id.empty())
      throw DataError(where + ": path, dataset and recording_id must be non-empty");
    if (!(r.rate > 0.0)) throw DataError(where + ": rate must be positive");
    if (r.channels < 1) throw DataError(where + ": channels must be at least 1");
    if (!paths.insert({r.dataset, r.path}).second) throw DataError(where + ": duplicate path " + r.path);
    if (!recordings.insert({r.dataset, r.recording_id}).second)
      throw DataError(where + ": duplicate recording id " + r.recording_id);
    if (!r.split.empty() && r.split != "train" && r.split != "test")
      throw DataError(where + ": split must be train, test or empty");
    if (classes) {
      const auto it = classes->find(r.dataset);
      if (it != classes->end() && std::find(it->second.begin(), it->second.end(), r.label) == it->second.end())
        throw DataError(where + ": label '" + r.label + "' is not declared for " + r.dataset);
    }
  }
}

// ------------------------------------------------------------ segmentation

std::vector<RawSignal> cut_segments(const MultiChannelAudio& audio, double seconds) {
  if (!(seconds > 0.0)) throw UsageError("segment length must be positive");
  if (!(audio.rate > 0.0)) throw DataError("audio rate must be positive");
  const auto len = static_cast<Eigen::Index>(std::llround(seconds * audio.rate));
  std::vector<RawSignal> out;
  for (std::size_t c = 0; c < audio.channels.size(); ++c) {
    const Eigen::VectorXd& x = audio.channels[c];
    if (x.size() == 0) continue;
    const Eigen::Index pieces = x.size() / len;
    auto push = [&](Eigen::Index start, Eigen::Index n) {
      RawSignal s;
      s.samples = x.segment(start, n);
      s.rate = audio.rate;
      s.meta.channel = static_cast<int>(c);
      out.push_back(std::move(s));
    };
    if (pieces == 0) push(0, x.size());
    for (Eigen::Index p = 0; p < pieces; ++p) push(p * len, len);
  }
  return out;
}

std::vector<Segment> segment_corpus(const Manifest& manifest, double seconds) {
  std::vector<Segment> out;
  for (std::size_t i = 0; i < manifest.rows.size(); ++i) {
    const auto& row = manifest.rows[i];
    const auto file = manifest.resolve(row);
    MultiChannelAudio audio;
    try {
      audio = read_audio(file, row.rate);
    } catch (const UsageError& e) {
      throw DataError(file.string() + ": " + e.what());
    }
    if (std::abs(audio.rate - row.rate) > 1e-9 * row.rate)
      throw DataError(file.string() + ": file rate " + format_double(audio.rate) + " differs from manifest rate " +
                      format_double(row.rate));
    if (static_cast<int>(audio.channels.size()) != row.channels)
      throw DataError(file.string() + ": file has " + std::to_string(audio.channels.size()) +
                      " channels, manifest declares " + std::to_string(row.channels));
    int index = 0;
    for (auto& sig : cut_segments(audio, seconds)) {
      sig.meta.dataset = row.dataset;
      sig.meta.recording_id = row.recording_id;
      sig.meta.label = row.label;
      sig.validate();
      Segment seg;
      seg.row = i;
      seg.channel = sig.meta.channel;
      seg.index = index++;
      seg.signal = std::move(sig);
      out.push_back(std::move(seg));
    }
  }
  if (out.empty()) throw DataError("manifest yields no usable segments");
  return out;
}

EmbeddingRecord record_for(const Manifest& manifest, const Segment& segment) {
  const auto& row = manifest.rows.at(segment.row);
  EmbeddingRecord r;
  r.dataset = row.dataset;
  r.recording_id = row.recording_id;
  r.segment = segment.index;
  r.key = row.section;
  r.domain = row.domain;
  r.condition_id = row.condition_id;
  r.split = row.split;
  r.subset = row.subset;
  r.modality = row.modality;
  r.label = row.label;
  return r;
}

// ----------------------------------------------------------- dataset setup

std::string task_name(Task task) { return task == Task::anomaly_detection ? "anomaly_detection" : "fault_diagnosis"; }

Task parse_task(const std::string& name) {
  if (name == "anomaly_detection") return Task::anomaly_detection;
  if (name == "fault_diagnosis") return Task::fault_diagnosis;
  throw DataError("unknown task '" + name + "'");
}

DatasetConfig dataset_config(const std::string& name, std::span<const EmbeddingRecord> records) {
  DatasetConfig c;
  c.name = name;
  if (starts_with_ci(name, "DCASE")) {
    c.task = Task::anomaly_detection;
    c.layout = starts_with_ci(name, "DCASE20") ? BankLayout::per_key : BankLayout::section_domain;
    return c;
  }
  const bool binary = !records.empty() && std::all_of(records.begin(), records.end(), [](const auto& r) {
    return r.label == "normal" || r.label == "anomaly";
  });
  if (binary) {
    c.task = Task::anomaly_detection;
    const bool domains = std::any_of(records.begin(), records.end(), [](const auto& r) { return !r.domain.empty(); });
    c.layout = domains ? BankLayout::section_domain : BankLayout::per_key;
    return c;
  }
  c.task = Task::fault_diagnosis;
  if (starts_with_ci(name, "IIEE")) c.k = 10;
  if (starts_with_ci(name, "UMGED")) c.train_ratio = 0.8;
  if (starts_with_ci(name, "PU")) c.group_by = GroupKey::condition;
  return c;
}

std::vector<EmbeddingRecord> select_dataset(std::span<const EmbeddingRecord> records, const std::string& name) {
  std::vector<EmbeddingRecord> out;
  for (const auto& r : records)
    if (r.dataset == name) out.push_back(r);
  return out;
}

std::vector<std::string> dataset_names(std::span<const EmbeddingRecord> records) {
  std::vector<std::string> names;
  for (const auto& r : records)
    if (std::find(names.begin(), names.end(), r.dataset) == names.end()) names.push_back(r.dataset);
  return names;
}

// ----------------------------------------------------------- sealed split

int train_group_count(int groups, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw UsageError("split ratio must lie in (0, 1)");
  return static_cast<int>(std::floor(ratio * groups + 0.5));
}

std::optional<SplitPlan> try_sealed_split(std::span<const std::string> group, std::span<const std::string> label,
                                          double ratio, std::uint64_t seed) {
  if (group.size() != label.size()) throw UsageError("one group id per label required");
  if (group.empty()) throw DataError("nothing to split");
  std::map<std::string, std::set<std::string>> classes_of;
  for (std::size_t i = 0; i < group.size(); ++i) classes_of[group[i]].insert(label[i]);
  std::vector<std::string> ids;
  std::vector<std::vector<std::string>> cls;
  for (const auto& [g, c] : classes_of) {
    ids.push_back(g);
    cls.emplace_back(c.begin(), c.end());
  }
  std::map<std::string, std::vector<int>> groups_of;
  for (int g = 0; g < static_cast<int>(ids.size()); ++g)
    for (const auto& c : cls[static_cast<std::size_t>(g)]) groups_of[c].push_back(g);
  for (const auto& [c, gs] : groups_of)
    if (gs.size() < 2) throw DataError("class '" + c + "' has a single group and cannot appear on both sides");

  const int G = static_cast<int>(ids.size());
  const int n_train = train_group_count(G, ratio);
  if (n_train < 1 || n_train > G - 1) return std::nullopt;

  auto covers = [&](const std::vector<int>& side) {
    for (const auto& [c, gs] : groups_of) {
      bool tr = false, te = false;
      for (int g : gs) (side[static_cast<std::size_t>(g)] == 0 ? tr : te) = true;
      if (!tr || !te) return false;
    }
    return true;
  };
  auto finish = [&](const std::vector<int>& side) {
    SplitPlan p;
    p.seed = seed;
    p.ratio = ratio;
    for (int g = 0; g < G; ++g) (side[static_cast<std::size_t>(g)] == 0 ? p.train_groups : p.test_groups).push_back(ids[static_cast<std::size_t>(g)]);
    return p;
  };

  std::mt19937_64 rng(derive_seed(seed, {kSplitTag}));
  std::vector<int> order(static_cast<std::size_t>(G));
  std::vector<int> side(static_cast<std::size_t>(G));
  for (int attempt = 0; attempt < kSplitDraws; ++attempt) {
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < G; ++i) side[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = i < n_train ? 0 : 1;
    if (covers(side)) return finish(side);
  }

  // Stratified repair: one group per class on each side, rest at random.
  std::fill(side.begin(), side.end(), -1);
  int used[2] = {0, 0};
  for (const auto& [c, gs] : groups_of) {
    for (int s = 0; s < 2; ++s) {
      const bool present = std::any_of(gs.begin(), gs.end(), [&](int g) { return side[static_cast<std::size_t>(g)] == s; });
      if (present) continue;
      std::vector<int> free;
      for (int g : gs)
        if (side[static_cast<std::size_t>(g)] < 0) free.push_back(g);
      if (free.empty()) return std::nullopt;
      const int g = free[std::uniform_int_distribution<std::size_t>(0, free.size() - 1)(rng)];
      side[static_cast<std::size_t>(g)] = s;
      ++used[s];
    }
  }
  if (used[0] > n_train || used[1] > G - n_train) return std::nullopt;
  std::vector<int> rest;
  for (int g = 0; g < G; ++g)
    if (side[static_cast<std::size_t>(g)] < 0) rest.push_back(g);
  std::shuffle(rest.begin(), rest.end(), rng);
  for (std::size_t i = 0; i < rest.size(); ++i)
    side[static_cast<std::size_t>(rest[i])] = static_cast<int>(i) < n_train - used[0] ? 0 : 1;
  return finish(side);
}

SplitPlan sealed_split(std::span<const std::string> group, std::span<const std::string> label, double ratio,
                       std::uint64_t seed) {
  auto plan = try_sealed_split(group, label, ratio, seed);
  if (!plan) throw DataError("no sealed split at ratio " + format_double(ratio) + " keeps every class on both sides");
  return *plan;
}

const std::string& group_of(const EmbeddingRecord& record, GroupKey key) {
  return key == GroupKey::condition ? record.condition_id : record.recording_id;
}

// -------------------------------------------------------------- evaluation

DatasetScore evaluate_anomaly(std::span<const EmbeddingRecord> records, const DatasetConfig& config) {
  std::map<std::string, std::pair<std::vector<ScoringRecord>, std::vector<ScoringRecord>>> by_subset;
  for (const auto& r : records) {
    ScoringRecord s{r.key, r.domain, is_anomaly_label(r.label), widen(r.vector)};
    if (r.split == "train") by_subset[r.subset].first.push_back(std::move(s));
    else if (r.split == "test") by_subset[r.subset].second.push_back(std::move(s));
    else throw DataError(config.name + ": anomaly detection needs train/test split tags");
  }
  if (by_subset.empty()) throw DataError(config.name + ": no records");
  std::vector<double> subset_scores;
  for (const auto& [subset, sets] : by_subset) {
    const auto& [train, test] = sets;
    if (train.empty() || test.empty()) throw DataError(config.name + ": subset '" + subset + "' lacks train or test records");
    const auto scores = score_anomaly_dataset(train, test, config.layout, config.ad_k);
    struct Section {
      std::map<std::string, std::vector<double>> normal;  // by domain
      std::vector<double> all_normal, anomaly;
    };
    std::map<std::string, Section> sections;
    for (std::size_t i = 0; i < test.size(); ++i) {
      auto& sec = sections[test[i].key];
      if (test[i].anomaly) {
        sec.anomaly.push_back(scores[i]);
      } else {
        sec.normal[test[i].domain].push_back(scores[i]);
        sec.all_normal.push_back(scores[i]);
      }
    }
    std::vector<double> terms;
    for (const auto& [key, sec] : sections) {
      if (sec.all_normal.empty() || sec.anomaly.empty())
        throw DataError(config.name + ": key '" + key + "' needs normal and anomalous test clips");
      if (config.layout == BankLayout::section_domain) {
        for (const auto& [domain, normal] : sec.normal) terms.push_back(auc(normal, sec.anomaly));
      } else {
        terms.push_back(auc(sec.all_normal, sec.anomaly));
      }
      terms.push_back(pauc(sec.all_normal, sec.anomaly, config.max_fpr));
    }
    subset_scores.push_back(harmonic_mean(terms));
  }
  DatasetScore out;
  out.name = config.name;
  out.task = Task::anomaly_detection;
  out.mean = 100.0 * harmonic_mean(subset_scores);
  out.scores = {out.mean};
  return out;
}

double diagnosis_accuracy(std::span<const EmbeddingRecord> records, const std::vector<bool>& is_train,
                          const DatasetConfig& config, const std::vector<std::string>& classes) {
  if (is_train.size() != records.size()) throw UsageError("one membership flag per record required");
  std::vector<std::size_t> tr, te;
  for (std::size_t i = 0; i < records.size(); ++i) (is_train[i] ? tr : te).push_back(i);
  if (tr.empty() || te.empty()) throw DataError(config.name + ": empty train or test side");
  const Eigen::Index dim = records[tr.front()].vector.size();
  MatD bank(static_cast<Eigen::Index>(tr.size()), dim);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    const auto& v = records[tr[i]].vector;
    if (v.size() != dim) throw DataError(config.name + ": embedding dimensions differ");
    bank.row(static_cast<Eigen::Index>(i)) = v.cast<double>().transpose();
    labels.push_back(records[tr[i]].label);
  }
  const int k = std::min<int>(config.k, static_cast<int>(tr.size()));
  std::vector<std::string> pred, truth;
  for (std::size_t i : te) {
    pred.push_back(knn_classify(widen(records[i].vector), bank, labels, k));
    truth.push_back(records[i].label);
  }
  return 100.0 * macro_accuracy(pred, truth, classes);
}

DatasetScore evaluate_diagnosis(std::span<const EmbeddingRecord> records, const DatasetConfig& config, int threads) {
  if (records.empty()) throw DataError(config.name + ": no records");
  const auto classes = sorted_labels(records);
  DatasetScore out;
  out.name = config.name;
  out.task = Task::fault_diagnosis;
  if (has_official_split(records)) {
    std::vector<bool> is_train;
    std::set<std::string> test_classes;
    for (const auto& r : records) {
      if (r.split != "train" && r.split != "test") throw DataError(config.name + ": mixed split tags");
      is_train.push_back(r.split == "train");
      if (r.split == "test") test_classes.insert(r.label);
    }
    out.mean = diagnosis_accuracy(records, is_train, config, {test_classes.begin(), test_classes.end()});
    out.scores = {out.mean};
    return out;
  }
  std::vector<std::string> group, label;
  for (const auto& r : records) {
    group.push_back(group_of(r, config.group_by));
    label.push_back(r.label);
  }
  std::vector<SplitPlan> plans;
  for (int s = 0; s < kEvaluationSeeds; ++s)
    plans.push_back(sealed_split(group, label, config.train_ratio, static_cast<std::uint64_t>(s)));
  out.scores.assign(plans.size(), 0.0);
  parallel_for(plans.size(), threads, [&](std::size_t s) {
    const std::set<std::string> train(plans[s].train_groups.begin(), plans[s].train_groups.end());
    std::vector<bool> is_train;
    for (const auto& g : group) is_train.push_back(train.count(g) > 0);
    out.scores[s] = diagnosis_accuracy(records, is_train, config, classes);
  });
  for (const auto& p : plans) out.seeds.push_back(p.seed);
  out.mean = std::accumulate(out.scores.begin(), out.scores.end(), 0.0) / static_cast<double>(out.scores.size());
  return out;
}

DatasetScore evaluate_fixed(std::span<const EmbeddingRecord> records, const DatasetConfig& config, int threads) {
  return config.task == Task::anomaly_detection ? evaluate_anomaly(records, config)
                                                : evaluate_diagnosis(records, config, threads);
}

// ---------------------------------------------------------- multi-split

std::vector<double> sweep_ratios() {
  std::vector<double> r;
  for (int k = 1; k <= 19; ++k) r.push_back(k / 20.0);
  return r;
}

double trapezoid_area(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw UsageError("trapezoid needs equal, non-empty x and y");
  if (x.size() == 1) return y[0];
  double area = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) throw UsageError("trapezoid x must be strictly increasing");
    area += (x[i] - x[i - 1]) * (y[i] + y[i - 1]) / 2.0;
  }
  return area / (x.back() - x.front());
}

SweepResult multi_split_sweep(std::span<const EmbeddingRecord> records, const DatasetConfig& config, int threads) {
  if (config.task != Task::fault_diagnosis) throw UsageError(config.name + ": split sweeps apply to fault diagnosis");
  if (records.empty()) throw DataError(config.name + ": no records");
  if (has_official_split(records)) throw UsageError(config.name + ": dataset has an official split");
  const auto classes = sorted_labels(records);
  std::vector<std::string> group, label;
  for (const auto& r : records) {
    group.push_back(group_of(r, config.group_by));
    label.push_back(r.label);
  }
  SweepResult out;
  out.dataset = config.name;
  struct Job {
    std::size_t point;
    SplitPlan plan;
  };
  std::vector<Job> jobs;
  for (double ratio : sweep_ratios()) {
    SweepPoint p;
    p.ratio = ratio;
    std::vector<SplitPlan> plans;
    for (int s = 0; s < kEvaluationSeeds; ++s) {
      auto plan = try_sealed_split(group, label, ratio, static_cast<std::uint64_t>(s));
      if (!plan) break;
      plans.push_back(std::move(*plan));
    }
    p.feasible = plans.size() == static_cast<std::size_t>(kEvaluationSeeds);
    if (p.feasible) {
      for (auto& plan : plans) {
        p.seeds.push_back(plan.seed);
        jobs.push_back({out.points.size(), std::move(plan)});
      }
      p.scores.assign(p.seeds.size(), 0.0);
    }
    out.points.push_back(std::move(p));
  }
  std::vector<double> job_score(jobs.size());
  parallel_for(jobs.size(), threads, [&](std::size_t j) {
    const std::set<std::string> train(jobs[j].plan.train_groups.begin(), jobs[j].plan.train_groups.end());
    std::vector<bool> is_train;
    for (const auto& g : group) is_train.push_back(train.count(g) > 0);
    job_score[j] = diagnosis_accuracy(records, is_train, config, classes);
  });
  std::vector<std::size_t> filled(out.points.size(), 0);
  for (std::size_t j = 0; j < jobs.size(); ++j) out.points[jobs[j].point].scores[filled[jobs[j].point]++] = job_score[j];
  std::vector<double> xs, ys;
  for (auto& p : out.points) {
    if (!p.feasible) continue;
    p.mean = std::accumulate(p.scores.begin(), p.scores.end(), 0.0) / static_cast<double>(p.scores.size());
    xs.push_back(p.ratio);
    ys.push_back(p.mean);
  }
  if (xs.empty()) throw DataError(config.name + ": no feasible split ratio");
  out.area = trapezoid_area(xs, ys);
  return out;
}

// -------------------------------------------------------------- aggregation

double task_mean(std::span<const DatasetScore> scores, Task task) {
  double sum = 0.0;
  int n = 0;
  for (const auto& s : scores)
    if (s.task == task) {
      sum += s.mean;
      ++n;
    }
  if (n == 0) throw UsageError("no " + task_name(task) + " datasets to aggregate");
  return sum / n;
}

MetricReport partial_report(std::vector<DatasetScore> scores, const std::string& model) {
  MetricReport r;
  r.model = model;
  for (Task t : {Task::anomaly_detection, Task::fault_diagnosis})
    if (std::any_of(scores.begin(), scores.end(), [&](const auto& s) { return s.task == t; }))
      r.task_means[t] = task_mean(scores, t);
  if (r.task_means.size() == 2)
    r.overall = (r.task_means[Task::anomaly_detection] + r.task_means[Task::fault_diagnosis]) / 2.0;
  r.datasets = std::move(scores);
  return r;
}

MetricReport aggregate(std::vector<DatasetScore> scores, const std::string& model) {
  task_mean(scores, Task::anomaly_detection);
  task_mean(scores, Task::fault_diagnosis);
  return partial_report(std::move(scores), model);
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw UsageError("pearson needs sequences of equal length");
  if (x.size() < 2) throw UsageError("pearson needs at least two points");
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) throw DataError("pearson of a constant sequence");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// ------------------------------------------------------------------ output

std::string report_json(const MetricReport& report) {
  Json j;
  j["format"] = "fisher-report";
  j["version"] = 1;
  j["model"] = report.model;
  j["parameters"] = report.parameters;
  j["unit"] = "percent";
  Json ds = Json::array();
  for (const auto& d : report.datasets)
    ds.push_back({{"name", d.name}, {"task", task_name(d.task)}, {"seeds", d.seeds}, {"scores", d.scores}, {"mean", d.mean}});
  j["datasets"] = ds;
  Json tm = Json::object();
  for (const auto& [t, v] : report.task_means) tm[task_name(t)] = v;
  j["task_means"] = tm;
  j["overall"] = report.overall ? Json(*report.overall) : Json(nullptr);
  return j.dump(2) + "\n";
}

MetricReport parse_report_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  if (j.value("format", "") != "fisher-report") throw DataError("not a report file");
  MetricReport r;
  r.model = j.value("model", "");
  r.parameters = j.value("parameters", std::int64_t{0});
  for (const auto& d : j.at("datasets")) {
    DatasetScore s;
    s.name = d.at("name");
    s.task = parse_task(d.at("task"));
    s.seeds = d.at("seeds").get<std::vector<std::uint64_t>>();
    s.scores = d.at("scores").get<std::vector<double>>();
    s.mean = d.at("mean");
    r.datasets.push_back(std::move(s));
  }
  for (const auto& [k, v] : j.at("task_means").items()) r.task_means[parse_task(k)] = v.get<double>();
  if (!j.at("overall").is_null()) r.overall = j.at("overall").get<double>();
  return r;
}

std::string report_csv(const MetricReport& report) {
  std::string out = csv_line({"dataset", "task", "seed", "score"});
  for (const auto& d : report.datasets) {
    for (std::size_t i = 0; i < d.scores.size(); ++i)
      out += csv_line({d.name, task_name(d.task), i < d.seeds.size() ? std::to_string(d.seeds[i]) : "official",
                       format_double(d.scores[i])});
    out += csv_line({d.name, task_name(d.task), "mean", format_double(d.mean)});
  }
  for (const auto& [t, v] : report.task_means) out += csv_line({"task_mean", task_name(t), "mean", format_double(v)});
  if (report.overall) out += csv_line({"overall", "", "mean", format_double(*report.overall)});
  return out;
}

std::string sweep_csv(const SweepResult& sweep) {
  std::string out = csv_line({"ratio", "seed", "score"});
  for (const auto& p : sweep.points)
    for (std::size_t i = 0; i < p.scores.size(); ++i)
      out += csv_line({format_double(p.ratio), std::to_string(p.seeds[i]), format_double(p.scores[i])});
  return out;
}

std::string sweep_json(std::span<const SweepResult> sweeps) {
  Json j;
  j["format"] = "fisher-sweep";
  j["version"] = 1;
  j["unit"] = "percent";
  Json arr = Json::array();
  for (const auto& s : sweeps) {
    Json pts = Json::array();
    for (const auto& p : s.points) {
      Json pj{{"ratio", p.ratio}, {"feasible", p.feasible}};
      if (p.feasible) {
        pj["seeds"] = p.seeds;
        pj["scores"] = p.scores;
        pj["mean"] = p.mean;
      }
      pts.push_back(pj);
    }
    arr.push_back({{"model", s.model}, {"dataset", s.dataset}, {"area", s.area}, {"points", pts}});
  }
  j["datasets"] = arr;
  return j.dump(2) + "\n";
}

std::vector<SweepResult> parse_sweep_json(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const std::exception& e) {
    throw DataError(std::string("malformed sweep file: ") + e.what());
  }
  if (j.value("format", "") != "fisher-sweep") throw DataError("not a sweep file");
  std::vector<SweepResult> out;
  for (const auto& d : j.at("datasets")) {
    SweepResult s;
    s.model = d.value("model", "");
    s.dataset = d.at("dataset");
    s.area = d.at("area");
    for (const auto& pj : d.at("points")) {
      SweepPoint p;
      p.ratio = pj.at("ratio");
      p.feasible = pj.at("feasible");
      if (p.feasible) {
        p.seeds = pj.at("seeds").get<std::vector<std::uint64_t>>();
        p.scores = pj.at("scores").get<std::vector<double>>();
        p.mean = pj.at("mean");
      }
      s.points.push_back(std::move(p));
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace fisher
