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

#ifndef FISHER_KNN_HPP_
#define FISHER_KNN_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fisher/common.hpp"

namespace fisher {

/// 1 - <a, b> / (|a| |b|), clamped to [0, 2]. Bit-exact 0 for a == b.
template <typename DerivedA, typename DerivedB>
double cosine_distance(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) throw UsageError("cosine distance between vectors of different size");
  const double aa = static_cast<double>(a.squaredNorm());
  const double bb = static_cast<double>(b.squaredNorm());
  if (!(aa > 0.0) || !(bb > 0.0)) throw DataError("cosine distance of a zero vector");
  const double ab = static_cast<double>(a.dot(b));
  return std::clamp(1.0 - ab / std::sqrt(aa * bb), 0.0, 2.0);
}

struct Neighbor {
  Eigen::Index index = 0;
  double distance = 0.0;
};

/// The k rows of `bank` closest to `query`, ascending by (distance, index).
std::vector<Neighbor> knn_search(const Eigen::Ref<const Eigen::VectorXd>& query, const MatD& bank, int k);

/// Normal reference embeddings, one per row, for one key/domain.
struct MemoryBank {
  std::string key;
  std::string domain;
  MatD embeddings;

  Eigen::Index size() const { return embeddings.rows(); }
};

/// Mean distance to the k nearest bank members.
double knn_anomaly_score(const Eigen::Ref<const Eigen::VectorXd>& query, const MemoryBank& bank, int k = 1);

/// Minimal view of an embedded segment for scoring.
struct ScoringRecord {
  std::string key;     // machine id or section
  std::string domain;  // "source", "target" or empty
  bool anomaly = false;
  Eigen::VectorXd vector;
};

enum class BankLayout {
  per_key,         // one bank per machine id
  section_domain,  // per section, separate source and target banks, min score
};

/// Scores every test record against the banks of its key. Throws DataError
/// when a test key has no bank.
std::vector<double> score_anomaly_dataset(std::span<const ScoringRecord> train, std::span<const ScoringRecord> test,
                                          BankLayout layout, int k = 1);

/// Majority vote over the k nearest; ties go to the smaller summed distance,
/// then to the lexicographically smaller label.
std::string knn_classify(const Eigen::Ref<const Eigen::VectorXd>& query, const MatD& train,
                         const std::vector<std::string>& labels, int k);

/// Fraction of (normal, anomaly) pairs ordered correctly, ties count 1/2.
double auc(std::span<const double> normal, std::span<const double> anomaly);

/// ROC area over false-positive rate [0, max_fpr], divided by max_fpr.
double pauc(std::span<const double> normal, std::span<const double> anomaly, double max_fpr = 0.1);

/// n / sum(1 / v). Throws on empty input or any value <= 0.
double harmonic_mean(std::span<const double> values);

/// Mean per-class recall over classes present in `labels`.
double macro_accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& labels);
/// Same over a declared class set; every class must occur in `labels`.
double macro_accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& labels,
                      const std::vector<std::string>& classes);

}  // namespace fisher

#endif  // FISHER_KNN_HPP_
