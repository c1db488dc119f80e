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

#include "core/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <set>
#include <sstream>

#include "core/errors.hpp"
#include "core/log.hpp"
#include "core/tensor_io.hpp"

namespace vulgraph::harness {

using nlohmann::json;

json RunConfig::to_json() const {
  json j;
  j["command"] = command;
  j["config"] = config.to_json();
  j["seed"] = config.seed;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["options"] = options;
  return j;
}

std::filesystem::path runconfig_path(const std::filesystem::path& output) {
  std::filesystem::path p = output;
  p += ".runconfig.json";
  return p;
}

void write_run_config(const RunConfig& run, const std::filesystem::path& output) {
  io::write_file(runconfig_path(output), run.to_json().dump(2) + "\n");
}

namespace {

double parse_number(std::string_view text) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw ConfigError("'" + std::string(text) + "' is not a number");
  return v;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw ConfigError("lambda grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] >= 0.0 && grid[i] <= 1.0)) throw ConfigError("lambda grid values must lie in [0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw ConfigError("lambda grid must be strictly increasing");
  }
}

std::vector<double> parse_grid(std::string_view spec) {
  std::vector<double> grid;
  if (spec.find(':') != std::string_view::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw ConfigError("grid must be start:stop:step");
    const double start = parse_number(parts[0]);
    const double stop = parse_number(parts[1]);
    const double step = parse_number(parts[2]);
    if (!(step > 0.0)) throw ConfigError("grid step must be > 0");
    if (stop < start) throw ConfigError("grid stop is below start");
    const auto n = static_cast<long>(std::floor((stop - start) / step + 1e-9));
    for (long i = 0; i <= n; ++i) {
      // Round to 12 decimals so 0:1:0.1 yields 0.3 rather than 0.30000000000000004.
      const double v = std::round((start + static_cast<double>(i) * step) * 1e12) / 1e12;
      grid.push_back(std::min(v, stop));
    }
  } else if (!spec.empty()) {
    for (auto part : split(spec, ',')) grid.push_back(parse_number(part));
  }
  check_grid(grid);
  return grid;
}

std::vector<int> parse_counts(std::string_view spec) {
  std::vector<int> counts;
  std::set<int> seen;
  for (auto part : split(spec, ',')) {
    const double v = parse_number(part);
    if (v < 1.0 || v != std::floor(v)) throw ConfigError("student counts must be integers >= 1");
    const int c = static_cast<int>(v);
    if (!seen.insert(c).second) {
      log::warn("duplicate student count " + std::to_string(c) + " ignored");
      continue;
    }
    counts.push_back(c);
  }
  if (counts.empty()) throw ConfigError("no student counts given");
  return counts;
}

std::string SweepResult::to_csv() const {
  std::ostringstream out;
  out << parameter;
  if (parameter == "students") out << ",label";
  out << ",acc,precision,recall,f1,tp,fp,tn,fn\n";
  for (const auto& p : points) {
    if (parameter == "students") {
      out << static_cast<int>(p.value) << "," << p.label;
    } else {
      out << p.label;
    }
    const auto& r = p.report;
    out << "," << metrics::percent(r.accuracy) << "," << metrics::percent(r.precision) << ","
        << metrics::percent(r.recall) << "," << metrics::percent(r.f1) << "," << r.tp << "," << r.fp << "," << r.tn
        << "," << r.fn << "\n";
  }
  return out.str();
}

const SweepPoint& SweepResult::best_accuracy() const {
  if (points.empty()) throw PreconditionError("sweep has no points");
  const SweepPoint* best = &points.front();
  for (const auto& p : points)
    if (p.report.accuracy > best->report.accuracy) best = &p;
  return *best;
}

BranchCache cache_branches(const train::Model& model, std::span<const Sample> samples) {
  BranchCache cache;
  for (const Sample& s : samples) {
    const auto pair = train::branch_outputs(model, s);
    cache.p_graph.push_back(pair.p_graph);
    cache.p_seq.push_back(pair.p_seq);
    cache.labels.push_back(s.label);
  }
  return cache;
}

SweepResult lambda_sweep(const BranchCache& cache, std::span<const double> grid) {
  check_grid(grid);
  SweepResult result;
  result.parameter = "lambda";
  for (double lambda : grid) {
    std::vector<int> preds;
    preds.reserve(cache.labels.size());
    for (std::size_t i = 0; i < cache.labels.size(); ++i)
      preds.push_back(train::decide(train::interpolate_predictions(cache.p_graph[i], cache.p_seq[i], lambda)));
    std::ostringstream label;
    label << lambda;
    result.points.push_back({lambda, label.str(), metrics::compute_metrics(preds, cache.labels)});
  }
  return result;
}

std::vector<Sample> split_samples(const train::Model& model, std::span<const cpg::CorpusRecord> corpus,
                                  cpg::Split split) {
  std::vector<Sample> out;
  std::size_t skipped = 0;
  for (const auto& r : corpus) {
    if (r.split != split) continue;
    if (r.graph.node_count() > model.config.max_nodes) {
      ++skipped;
      continue;
    }
    out.push_back(train::prepare(model, r.graph, r.split));
  }
  if (skipped) log::warn(std::to_string(skipped) + " record(s) above max_nodes were skipped");
  return out;
}

SweepResult student_ablation(std::span<const int> counts, const train::TrainConfig& config,
                             std::span<const cpg::CorpusRecord> corpus) {
  std::vector<int> unique;
  for (int c : counts) {
    if (c < 1) throw ConfigError("student counts must be >= 1");
    if (std::find(unique.begin(), unique.end(), c) != unique.end()) {
      log::warn("duplicate student count " + std::to_string(c) + " ignored");
      continue;
    }
    unique.push_back(c);
  }
  const bool has_test = std::any_of(corpus.begin(), corpus.end(),
                                    [](const cpg::CorpusRecord& r) { return r.split == cpg::Split::kTest; });
  SweepResult result;
  result.parameter = "students";
  for (int c : unique) {
    train::TrainConfig cfg = config;
    cfg.kd.students = c;
    if (c == 1) cfg.kd.alpha = 0.0;
    const auto trained = train::train(cfg, corpus);
    const auto samples = split_samples(trained.model, corpus, has_test ? cpg::Split::kTest : cpg::Split::kValid);
    if (samples.empty()) throw DataError("no evaluation records for the ablation");
    result.points.push_back({static_cast<double>(c), c == 1 ? "self" : std::to_string(c) + "-student",
                             train::evaluate(trained.model, samples)});
  }
  return result;
}

std::string cwe_csv(std::span<const metrics::CweRow> rows) {
  std::ostringstream out;
  out << "cwe,support,accuracy\n";
  for (const auto& r : rows) out << r.cwe << "," << r.support << "," << metrics::percent(r.accuracy) << "\n";
  return out.str();
}

}  // namespace vulgraph::harness
