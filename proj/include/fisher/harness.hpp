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

#ifndef FISHER_HARNESS_HPP_
#define FISHER_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fisher/embedding_io.hpp"
#include "fisher/knn.hpp"
#include "fisher/signal.hpp"
#include "fisher/wav.hpp"

namespace fisher {

// ---------------------------------------------------------------- manifest

/// One source file. `section` holds the machine id (anomaly detection) or is
/// empty; `split` is "train", "test" or empty when no official split exists.
struct ManifestRow {
  std::string path;
  std::string dataset;
  std::string modality;
  double rate = 0.0;
  std::string recording_id;
  std::string condition_id;
  int channels = 1;
  std::string label;
  std::string section;
  std::string domain;
  std::string split;
  std::string subset;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

struct Manifest {
  std::vector<ManifestRow> rows;
  std::filesystem::path base_dir;  // relative row paths resolve against this

  std::filesystem::path resolve(const ManifestRow& row) const;
};

/// Column order of the manifest CSV header.
const std::vector<std::string>& manifest_columns();

/// Header-bearing CSV with RFC 4180 quoting. Columns may appear in any order;
/// unknown columns are ignored, `path`, `dataset`, `rate`, `recording_id` and
/// `label` are required.
Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);

/// Declared class labels per dataset, in declaration order.
using ClassSets = std::map<std::string, std::vector<std::string>>;

/// CSV with header `dataset,class`, one row per declared class.
ClassSets read_class_sets(const std::filesystem::path& path);
void write_class_sets(const std::filesystem::path& path, const ClassSets& classes);

/// Throws DataError unless rate > 0 and channels >= 1 on every row, no
/// dataset lists a path or recording id twice, and every label belongs to its
/// dataset's declared class set (when one is given).
void validate_manifest(const Manifest& manifest, const ClassSets* classes = nullptr);

// ------------------------------------------------------------ segmentation

inline constexpr double kSegmentSeconds = 10.0;

struct Segment {
  std::size_t row = 0;  // manifest row
  int channel = 0;
  int index = 0;        // running index within the row, channel-major
  RawSignal signal;
};

/// Flattens channels and cuts each into non-overlapping segments of
/// `seconds`; the remainder is dropped. A channel shorter than `seconds` is
/// kept whole as one segment.
std::vector<RawSignal> cut_segments(const MultiChannelAudio& audio, double seconds = kSegmentSeconds);

/// Reads every manifest row and segments it. Throws DataError on unreadable
/// files, declared rate or channel mismatch, or an empty result.
std::vector<Segment> segment_corpus(const Manifest& manifest, double seconds = kSegmentSeconds);

/// Embedding record carrying the metadata of `segment`, vector left empty.
EmbeddingRecord record_for(const Manifest& manifest, const Segment& segment);

// ----------------------------------------------------------- dataset setup

enum class Task { anomaly_detection, fault_diagnosis };

std::string task_name(Task task);
Task parse_task(const std::string& name);

enum class GroupKey { recording, condition };

/// Evaluation protocol of one dataset.
struct DatasetConfig {
  std::string name;
  Task task = Task::fault_diagnosis;
  // Anomaly detection.
  BankLayout layout = BankLayout::per_key;
  double max_fpr = 0.1;
  int ad_k = 1;
  // Fault diagnosis.
  double train_ratio = 0.5;
  int k = 5;
  GroupKey group_by = GroupKey::recording;
};

/// Protocol for a dataset name. DCASE20 scores machines with one bank per
/// machine id; later DCASE years use per-section source/target banks. IIEE
/// uses k = 10, UMGED 4:1 splits, PU groups by working condition. Unknown
/// names are anomaly detection when every label is normal/anomaly, else
/// fault diagnosis; their layout follows the presence of domain tags.
DatasetConfig dataset_config(const std::string& name, std::span<const EmbeddingRecord> records);

/// Records of one dataset in file order.
std::vector<EmbeddingRecord> select_dataset(std::span<const EmbeddingRecord> records, const std::string& name);

/// Dataset names in first-appearance order.
std::vector<std::string> dataset_names(std::span<const EmbeddingRecord> records);

// ----------------------------------------------------------- sealed split

struct SplitPlan {
  std::uint64_t seed = 0;
  double ratio = 0.5;
  std::vector<std::string> train_groups;  // sorted
  std::vector<std::string> test_groups;   // sorted
};

/// Number of training groups for `groups` at `ratio`: round half up.
int train_group_count(int groups, double ratio);

/// Allocates whole groups to train or test. `group[i]` and `label[i]`
/// describe segment i. Up to 64 uniform draws at the target ratio are tried;
/// if none covers every class on both sides, a stratified draw seeds one
/// group per class on each side and fills the rest at random. Returns
/// nullopt when the ratio admits no such plan. Throws DataError when a class
/// owns fewer than two groups.
std::optional<SplitPlan> try_sealed_split(std::span<const std::string> group, std::span<const std::string> label,
                                          double ratio, std::uint64_t seed);

/// As try_sealed_split, throwing DataError when infeasible.
SplitPlan sealed_split(std::span<const std::string> group, std::span<const std::string> label, double ratio,
                       std::uint64_t seed);

const std::string& group_of(const EmbeddingRecord& record, GroupKey key);

// -------------------------------------------------------------- evaluation

/// Seeds used for repeated splits.
inline constexpr int kEvaluationSeeds = 10;

struct DatasetScore {
  std::string name;
  Task task = Task::fault_diagnosis;
  std::vector<std::uint64_t> seeds;  // empty for a single official split
  std::vector<double> scores;        // percent, one per seed or one total
  double mean = 0.0;                 // percent
};

/// Challenge score in percent. Per subset: "machine" layout takes the
/// harmonic mean of AUC and pAUC over all machine ids; "section_domain"
/// takes the harmonic mean of source AUC, target AUC and pAUC over all
/// sections, where the domain AUCs use that domain's normal clips against
/// every anomaly of the section. Subsets (dev / eval) combine by harmonic
/// mean.
DatasetScore evaluate_anomaly(std::span<const EmbeddingRecord> records, const DatasetConfig& config);

/// Macro accuracy of k-NN with a given train / test membership (percent).
double diagnosis_accuracy(std::span<const EmbeddingRecord> records, const std::vector<bool>& is_train,
                          const DatasetConfig& config, const std::vector<std::string>& classes);

/// Official split when split tags exist, else seeds 0..9 of sealed splits at
/// config.train_ratio.
DatasetScore evaluate_diagnosis(std::span<const EmbeddingRecord> records, const DatasetConfig& config,
                                int threads = 1);

DatasetScore evaluate_fixed(std::span<const EmbeddingRecord> records, const DatasetConfig& config, int threads = 1);

// ---------------------------------------------------------- multi-split

struct SweepPoint {
  double ratio = 0.0;
  bool feasible = false;
  std::vector<std::uint64_t> seeds;
  std::vector<double> scores;  // percent
  double mean = 0.0;
};

struct SweepResult {
  std::string model;
  std::string dataset;
  std::vector<SweepPoint> points;
  double area = 0.0;
};

/// Ratios k / 20 for k = 1..19.
std::vector<double> sweep_ratios();

/// Trapezoid integral of (x, y) divided by the x span; a single point maps to
/// its own value. x must be strictly increasing.
double trapezoid_area(std::span<const double> x, std::span<const double> y);

/// Evaluates every ratio with shared seeds 0..9. Infeasible ratios are kept
/// in the result with feasible = false and excluded from the area.
SweepResult multi_split_sweep(std::span<const EmbeddingRecord> records, const DatasetConfig& config,
                              int threads = 1);

// -------------------------------------------------------------- aggregation

struct MetricReport {
  std::string model;
  std::int64_t parameters = 0;  // encoder size, 0 if unknown
  std::vector<DatasetScore> datasets;
  std::map<Task, double> task_means;
  std::optional<double> overall;
};

/// Mean of the dataset means of one task. Throws UsageError when empty.
double task_mean(std::span<const DatasetScore> scores, Task task);

/// Task means plus their arithmetic mean. Throws UsageError unless both tasks
/// have at least one dataset.
MetricReport aggregate(std::vector<DatasetScore> scores, const std::string& model);

/// Task means for whichever tasks are present; overall left empty unless both
/// are.
MetricReport partial_report(std::vector<DatasetScore> scores, const std::string& model);

/// Sample Pearson correlation. Throws UsageError on length mismatch or fewer
/// than two points, DataError on zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

// ------------------------------------------------------------------ output

std::string report_json(const MetricReport& report);
MetricReport parse_report_json(const std::string& text);
/// Rows `dataset,task,seed,score`, per-seed values then a `mean` row.
std::string report_csv(const MetricReport& report);

/// Rows `ratio,seed,score` for every feasible (ratio, seed).
std::string sweep_csv(const SweepResult& sweep);
std::string sweep_json(std::span<const SweepResult> sweeps);
std::vector<SweepResult> parse_sweep_json(const std::string& text);

}  // namespace fisher

#endif  // FISHER_HARNESS_HPP_
