// Copyright 2026 The vulgraph Authors
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

#include "core/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "core/errors.hpp"

namespace vulgraph::metrics {

nlohmann::json MetricsReport::to_json() const {
  return {{"accuracy", accuracy},
          {"precision", precision},
          {"recall", recall},
          {"f1", f1},
          {"tp", tp},
          {"fp", fp},
          {"tn", tn},
          {"fn", fn},
          {"precision_undefined", precision_undefined},
          {"recall_undefined", recall_undefined}};
}

MetricsReport from_confusion(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn) {
  MetricsReport r;
  r.tp = tp;
  r.fp = fp;
  r.tn = tn;
  r.fn = fn;
  const std::size_t total = tp + fp + tn + fn;
  r.accuracy = total ? static_cast<double>(tp + tn) / static_cast<double>(total) : 0.0;
  r.precision_undefined = tp + fp == 0;
  r.recall_undefined = tp + fn == 0;
  r.precision = r.precision_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
  r.recall = r.recall_undefined ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
  r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
  return r;
}

MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw DataError("compute_metrics: " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(labels.size()) + " labels");
  if (labels.empty()) throw DataError("compute_metrics: no records");
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool p = predictions[i] == 1;
    const bool y = labels[i] == 1;
    if (p && y) ++tp;
    else if (p) ++fp;
    else if (y) ++fn;
    else ++tn;
  }
  return from_confusion(tp, fp, tn, fn);
}

std::vector<CweRow> per_cwe_accuracy(std::span<const int> predictions, std::span<const int> labels,
                                     std::span<const std::vector<std::string>> cwe_tags, std::size_t top) {
  if (predictions.size() != labels.size() || labels.size() != cwe_tags.size())
    throw DataError("per_cwe_accuracy: inputs differ in length");
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // tag -> (support, correct)
  std::size_t untagged = 0, untagged_correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool correct = predictions[i] == labels[i];
    if (cwe_tags[i].empty()) {
      ++untagged;
      untagged_correct += correct ? 1 : 0;
      continue;
    }
    std::vector<std::string> tags = cwe_tags[i];
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    for (const auto& t : tags) {
      auto& [support, ok] = tally[t];
      ++support;
      ok += correct ? 1 : 0;
    }
  }
  std::vector<CweRow> rows;
  for (const auto& [tag, counts] : tally)
    rows.push_back({tag, counts.first, static_cast<double>(counts.second) / static_cast<double>(counts.first)});
  std::stable_sort(rows.begin(), rows.end(), [](const CweRow& a, const CweRow& b) { return a.support > b.support; });
  if (rows.size() > top) rows.resize(top);
  if (untagged > 0)
    rows.push_back({kUntaggedRow, untagged, static_cast<double>(untagged_correct) / static_cast<double>(untagged)});
  return rows;
}

std::string percent(double fraction) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
  return buf;
}

}  // namespace vulgraph::metrics
