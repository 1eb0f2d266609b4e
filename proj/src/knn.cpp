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

#include "fisher/knn.hpp"

#include <numeric>

namespace fisher {

namespace {

void check_scores(std::span<const double> normal, std::span<const double> anomaly) {
  if (normal.empty() || anomaly.empty()) throw UsageError("AUC needs at least one normal and one anomalous score");
  for (double v : normal)
    if (!std::isfinite(v)) throw DataError("non-finite anomaly score");
  for (double v : anomaly)
    if (!std::isfinite(v)) throw DataError("non-finite anomaly score");
}

}  // namespace

std::vector<Neighbor> knn_search(const Eigen::Ref<const Eigen::VectorXd>& query, const MatD& bank, int k) {
  if (bank.rows() == 0) throw UsageError("empty reference set");
  if (k < 1 || k > bank.rows()) throw UsageError("k must lie in [1, reference size]");
  if (bank.cols() != query.size()) throw UsageError("query and reference dimensions differ");
  std::vector<Neighbor> all(static_cast<std::size_t>(bank.rows()));
  for (Eigen::Index i = 0; i < bank.rows(); ++i) all[static_cast<std::size_t>(i)] = {i, cosine_distance(query, bank.row(i).transpose())};
  const auto less = [](const Neighbor& a, const Neighbor& b) {
    return a.distance < b.distance || (a.distance == b.distance && a.index < b.index);
  };
  std::partial_sort(all.begin(), all.begin() + k, all.end(), less);
  all.resize(static_cast<std::size_t>(k));
  return all;
}

double knn_anomaly_score(const Eigen::Ref<const Eigen::VectorXd>& query, const MemoryBank& bank, int k) {
  const auto nn = knn_search(query, bank.embeddings, k);
  double sum = 0.0;
  for (const auto& n : nn) sum += n.distance;
  return sum / static_cast<double>(nn.size());
}

std::vector<double> score_anomaly_dataset(std::span<const ScoringRecord> train, std::span<const ScoringRecord> test,
                                          BankLayout layout, int k) {
  const bool by_domain = layout == BankLayout::section_domain;
  std::map<std::pair<std::string, std::string>, std::vector<const ScoringRecord*>> members;
  for (const auto& r : train) {
    if (r.anomaly) continue;
    members[{r.key, by_domain ? r.domain : std::string()}].push_back(&r);
  }
  std::map<std::string, std::vector<MemoryBank>> banks;
  for (const auto& [id, recs] : members) {
    MemoryBank b;
    b.key = id.first;
    b.domain = id.second;
    b.embeddings.resize(static_cast<Eigen::Index>(recs.size()), recs.front()->vector.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      if (recs[i]->vector.size() != b.embeddings.cols()) throw DataError("embedding dimensions differ within a bank");
      b.embeddings.row(static_cast<Eigen::Index>(i)) = recs[i]->vector.transpose();
    }
    banks[b.key].push_back(std::move(b));
  }
  std::vector<double> scores;
  scores.reserve(test.size());
  for (const auto& q : test) {
    const auto it = banks.find(q.key);
    if (it == banks.end()) throw DataError("no memory bank for key '" + q.key + "'");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& b : it->second) best = std::min(best, knn_anomaly_score(q.vector, b, std::min<int>(k, b.size())));
    scores.push_back(best);
  }
  return scores;
}

std::string knn_classify(const Eigen::Ref<const Eigen::VectorXd>& query, const MatD& train,
                         const std::vector<std::string>& labels, int k) {
  if (static_cast<Eigen::Index>(labels.size()) != train.rows()) throw UsageError("one label per training row required");
  const auto nn = knn_search(query, train, k);
  struct Tally {
    int votes = 0;
    double distance = 0.0;
  };
  std::map<std::string, Tally> tally;
  for (const auto& n : nn) {
    auto& t = tally[labels[static_cast<std::size_t>(n.index)]];
    ++t.votes;
    t.distance += n.distance;
  }
  // std::map iterates labels in ascending order, so strict comparisons keep
  // the smaller label on a full tie.
  const std::string* best = nullptr;
  Tally top;
  for (const auto& [label, t] : tally) {
    if (!best || t.votes > top.votes || (t.votes == top.votes && t.distance < top.distance)) {
      best = &label;
      top = t;
    }
  }
  return *best;
}

double auc(std::span<const double> normal, std::span<const double> anomaly) {
  check_scores(normal, anomaly);
  std::vector<double> n(normal.begin(), normal.end());
  std::vector<double> a(anomaly.begin(), anomaly.end());
  std::sort(n.begin(), n.end());
  std::sort(a.begin(), a.end());
  // Twice the Mann-Whitney count: 2 per ordered pair, 1 per tie.
  unsigned long long twice = 0;
  std::size_t below = 0, upto = 0;
  for (double s : a) {
    while (below < n.size() && n[below] < s) ++below;
    while (upto < n.size() && n[upto] <= s) ++upto;
    twice += 2ULL * below + (upto - below);
  }
  return static_cast<double>(twice) / (2.0 * static_cast<double>(n.size()) * static_cast<double>(a.size()));
}

double pauc(std::span<const double> normal, std::span<const double> anomaly, double max_fpr) {
  check_scores(normal, anomaly);
  if (!(max_fpr > 0.0 && max_fpr <= 1.0)) throw UsageError("pAUC fraction must lie in (0, 1]");
  std::vector<double> n(normal.begin(), normal.end());
  std::vector<double> a(anomaly.begin(), anomaly.end());
  std::sort(n.begin(), n.end(), std::greater<>());
  std::sort(a.begin(), a.end(), std::greater<>());
  const double nn = static_cast<double>(n.size()), na = static_cast<double>(a.size());
  // Walk thresholds from high to low; tied groups give diagonal ROC segments.
  double area = 0.0, fpr = 0.0, tpr = 0.0;
  std::size_t i = 0, j = 0;
  while (i < n.size() || j < a.size()) {
    const double t = std::max(i < n.size() ? n[i] : -INFINITY, j < a.size() ? a[j] : -INFINITY);
    while (i < n.size() && n[i] == t) ++i;
    while (j < a.size() && a[j] == t) ++j;
    const double f1 = static_cast<double>(i) / nn, t1 = static_cast<double>(j) / na;
    if (f1 > fpr) {
      const double end = std::min(f1, max_fpr);
      const double t_end = tpr + (t1 - tpr) * (end - fpr) / (f1 - fpr);
      area += (end - fpr) * (tpr + t_end) / 2.0;
      if (f1 >= max_fpr) return area / max_fpr;
    }
    fpr = f1;
    tpr = t1;
  }
  return area / max_fpr;
}

double harmonic_mean(std::span<const double> values) {
  if (values.empty()) throw UsageError("harmonic mean of nothing");
  double inv = 0.0;
  for (double v : values) {
    if (!(v > 0.0)) throw DataError("harmonic mean needs positive values");
    inv += 1.0 / v;
  }
  return static_cast<double>(values.size()) / inv;
}

double macro_accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& labels) {
  if (predictions.size() != labels.size()) throw UsageError("prediction and label counts differ");
  if (labels.empty()) throw UsageError("macro accuracy of nothing");
  std::map<std::string, std::pair<int, int>> per;  // correct, total
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& c = per[labels[i]];
    ++c.second;
    if (predictions[i] == labels[i]) ++c.first;
  }
  double sum = 0.0;
  for (const auto& [label, c] : per) sum += static_cast<double>(c.first) / static_cast<double>(c.second);
  return sum / static_cast<double>(per.size());
}

double macro_accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& labels,
                      const std::vector<std::string>& classes) {
  for (const auto& c : classes)
    if (std::find(labels.begin(), labels.end(), c) == labels.end())
      throw DataError("class '" + c + "' has no evaluation instances");
  for (const auto& l : labels)
    if (std::find(classes.begin(), classes.end(), l) == classes.end())
      throw DataError("label '" + l + "' is not a declared class");
  return macro_accuracy(predictions, labels);
}

}  // namespace fisher
