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

// Experiment plumbing shared by the CLI: resolved run configs, the lambda
// sweep over cached branch outputs, the student-count ablation and CSV output.

#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "core/cpg.hpp"
#include "core/metrics.hpp"
#include "core/train.hpp"

namespace vulgraph::harness {

using Vector = Eigen::VectorXd;

struct RunConfig {
  std::string command;
  train::TrainConfig config;
  std::map<std::string, std::string> inputs;
  std::map<std::string, std::string> outputs;
  std::map<std::string, std::string> options;

  nlohmann::json to_json() const;
};

// "<output>.runconfig.json" next to the output file.
std::filesystem::path runconfig_path(const std::filesystem::path& output);
void write_run_config(const RunConfig& run, const std::filesystem::path& output);

// "start:stop:step" (inclusive stop) or a comma list. The result must be
// nonempty, strictly increasing and inside [0, 1].
std::vector<double> parse_grid(std::string_view spec);
void check_grid(std::span<const double> grid);

// "1,2,3" -> {1,2,3}; duplicates are dropped with a warning.
std::vector<int> parse_counts(std::string_view spec);

struct SweepPoint {
  double value = 0.0;
  std::string label;
  metrics::MetricsReport report;
};

struct SweepResult {
  std::string parameter;  // "lambda" or "students"
  std::vector<SweepPoint> points;

  std::string to_csv() const;
  // Point with the highest accuracy; first one on ties.
  const SweepPoint& best_accuracy() const;
};

// Branch probabilities for every sample, computed once.
struct BranchCache {
  std::vector<Vector> p_graph;
  std::vector<Vector> p_seq;
  std::vector<int> labels;
};

BranchCache cache_branches(const train::Model& model, std::span<const Sample> samples);
SweepResult lambda_sweep(const BranchCache& cache, std::span<const double> grid);

// Samples of one split prepared for `model`. Records above max_nodes are skipped with a warning.
std::vector<Sample> split_samples(const train::Model& model, std::span<const cpg::CorpusRecord> corpus, cpg::Split split);

// One train + evaluate per student count with a shared seed. Count 1 is the
// "self" row (no distillation). Evaluation uses the test split, or the valid
// split when the corpus has no test records.
SweepResult student_ablation(std::span<const int> counts, const train::TrainConfig& config,
                             std::span<const cpg::CorpusRecord> corpus);

std::string cwe_csv(std::span<const metrics::CweRow> rows);

}  // namespace vulgraph::harness
