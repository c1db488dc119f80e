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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace vulgraph::metrics {

// Binary metrics with class 1 (vulnerable) as the positive class. Precision
// and recall with a zero denominator are reported as 0 and flagged.
struct MetricsReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  bool precision_undefined = false;
  bool recall_undefined = false;

  std::size_t total() const { return tp + fp + tn + fn; }
  nlohmann::json to_json() const;
};

MetricsReport compute_metrics(std::span<const int> predictions, std::span<const int> labels);
MetricsReport from_confusion(std::size_t tp, std::size_t fp, std::size_t tn, std::size_t fn);

struct CweRow {
  std::string cwe;  // "(untagged)" for the residual row
  std::size_t support = 0;
  double accuracy = 0.0;
};

// Accuracy per CWE tag over records carrying it, by descending support (tag
// name breaks ties), truncated to `top`. Untagged records form one trailing
// residual row when any exist.
std::vector<CweRow> per_cwe_accuracy(std::span<const int> predictions, std::span<const int> labels,
                                     std::span<const std::vector<std::string>> cwe_tags, std::size_t top = 30);

inline constexpr const char* kUntaggedRow = "(untagged)";

// Value in [0,1] as a percentage with two decimals, e.g. "83.87".
std::string percent(double fraction);

}  // namespace vulgraph::metrics
