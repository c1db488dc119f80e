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

#include "core/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>
#include <string>

#include "core/errors.hpp"

namespace vulgraph::synthetic {

using nlohmann::json;

namespace {

struct Filler {
  const char* type;
  const char* code;
};

constexpr std::array<Filler, 6> kFillers = {{
    {"Identifier", "@"},
    {"Literal", "0"},
    {"Assignment", "@ = 1"},
    {"Call", "log_event(@)"},
    {"Return", "return @"},
    {"Compare", "@ > 0"},
}};

}  // namespace

cpg::CodePropertyGraph make_graph(std::size_t index, int label, bool plant_vulnerable, std::uint64_t seed,
                                  int min_nodes, int max_nodes) {
  if (min_nodes < 3 || max_nodes < min_nodes) throw ConfigError("synthetic graphs need 3 <= min_nodes <= max_nodes");
  std::mt19937_64 rng(seed * 0x9e3779b97f4a7c15ULL + index);
  const int n = std::uniform_int_distribution<int>(min_nodes, max_nodes)(rng);
  const int motif = std::uniform_int_distribution<int>(1, n - 1)(rng);
  const std::string var = "v" + std::to_string(index);

  json nodes = json::array();
  json edges = json::array();
  std::string code = "void f" + std::to_string(index) + "(char *dst, const char *src, int n, int cap) {\n";
  nodes.push_back({{"id", 1}, {"type", "Method"}, {"code", "f" + std::to_string(index)}});
  for (int i = 1; i < n; ++i) {
    std::string type, fragment;
    if (i == motif) {
      type = plant_vulnerable ? kVulnerableType : kSafeType;
      fragment = plant_vulnerable ? "memcpy(dst, src, n)" : "if (n < cap)";
    } else {
      const auto& f = kFillers[std::uniform_int_distribution<std::size_t>(0, kFillers.size() - 1)(rng)];
      type = f.type;
      fragment = f.code;
      if (const auto pos = fragment.find('@'); pos != std::string::npos)
        fragment.replace(pos, 1, var + "_" + std::to_string(i));
    }
    const int id = i + 1;
    nodes.push_back({{"id", id}, {"type", type}, {"code", fragment}});
    edges.push_back({{"src", 1}, {"dst", id}, {"kind", "AST"}});
    if (i > 1) edges.push_back({{"src", id - 1}, {"dst", id}, {"kind", "CFG"}});
    if (i > 1 && std::bernoulli_distribution(0.3)(rng)) {
      const int from = std::uniform_int_distribution<int>(2, id - 1)(rng);
      edges.push_back({{"src", from}, {"dst", id}, {"kind", "DDG"}});
    }
    code += "  " + fragment + ";\n";
  }
  edges.push_back({{"src", 1}, {"dst", motif + 1}, {"kind", "CDG"}});
  code += "}\n";

  json doc = {{"function_id", "synthetic_" + std::to_string(index)},
              {"label", label},
              {"cwe", label == 1 ? json::array({"CWE-120"}) : json::array()},
              {"code", code},
              {"nodes", nodes},
              {"edges", edges}};
  return cpg::prune_nonleaf_properties(cpg::parse_cpg_export(doc));
}

std::vector<cpg::CorpusRecord> make_corpus(const Options& options) {
  if (options.valid_fraction < 0.0 || options.test_fraction < 0.0 || options.valid_fraction + options.test_fraction >= 1.0)
    throw ConfigError("synthetic split fractions must be >= 0 and sum below 1");
  if (options.label_noise < 0.0 || options.label_noise > 1.0) throw ConfigError("label_noise must lie in [0, 1]");
  std::mt19937_64 rng(options.seed);
  std::vector<cpg::CorpusRecord> out;
  out.reserve(options.count);
  for (std::size_t i = 0; i < options.count; ++i) {
    const int label = i % 2 == 0 ? 1 : 0;
    const bool flip = std::bernoulli_distribution(options.label_noise)(rng);
    cpg::CorpusRecord r;
    r.graph = make_graph(i, label, (label == 1) != flip, options.seed, options.min_nodes, options.max_nodes);
    out.push_back(std::move(r));
  }
  // Per class, the last valid/test fractions of a shuffled order.
  for (int label : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < out.size(); ++i)
      if (out[i].graph.label == label) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n_valid = static_cast<std::size_t>(options.valid_fraction * static_cast<double>(idx.size()) + 0.5);
    const auto n_test = static_cast<std::size_t>(options.test_fraction * static_cast<double>(idx.size()) + 0.5);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      if (j < n_valid)
        out[idx[j]].split = cpg::Split::kValid;
      else if (j < n_valid + n_test)
        out[idx[j]].split = cpg::Split::kTest;
    }
  }
  return out;
}

}  // namespace vulgraph::synthetic
