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

#include "core/sample.hpp"

#include <algorithm>

namespace vulgraph {

Neighborhoods Neighborhoods::from_graph(const cpg::CodePropertyGraph& graph) {
  const std::size_t n = graph.node_count();
  std::vector<std::vector<int>> adj(n);
  for (const auto& e : graph.edges) {
    if (e.src == e.dst) continue;
    const int s = static_cast<int>(*graph.index_of(e.src));
    const int d = static_cast<int>(*graph.index_of(e.dst));
    adj[s].push_back(d);
    adj[d].push_back(s);
  }
  Neighborhoods nb;
  nb.offsets.push_back(0);
  for (auto& list : adj) {
    // Rows follow ascending node id, so sorting rows sorts ids.
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
    nb.index.insert(nb.index.end(), list.begin(), list.end());
    nb.offsets.push_back(static_cast<int>(nb.index.size()));
  }
  return nb;
}

std::size_t Neighborhoods::counted() const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < nodes(); ++i) c += offsets[i + 1] > offsets[i] ? 1 : 0;
  return c;
}

Sample make_sample(const cpg::CodePropertyGraph& graph, cpg::Split split, const features::TypeVocabulary& vocab,
                   const features::EmbeddingProvider& provider) {
  Sample s;
  s.function_id = graph.function_id;
  s.features = features::featurize(graph, vocab, provider);
  s.topology = ggnn::Topology::from_graph(graph);
  s.neighborhoods = Neighborhoods::from_graph(graph);
  s.label = graph.label;
  s.cwe_tags = graph.cwe_tags;
  s.split = split;
  return s;
}

}  // namespace vulgraph
