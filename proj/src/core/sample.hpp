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

#include <span>
#include <string>
#include <vector>

#include "core/cpg.hpp"
#include "core/featurize.hpp"
#include "core/ggnn.hpp"

namespace vulgraph {

// Undirected union of all edge kinds, self-loops dropped, neighbours in
// ascending id order. Node rows without neighbours have an empty range.
struct Neighborhoods {
  std::vector<int> offsets;  // size nodes + 1
  std::vector<int> index;    // neighbour rows

  static Neighborhoods from_graph(const cpg::CodePropertyGraph& graph);
  std::size_t nodes() const { return offsets.empty() ? 0 : offsets.size() - 1; }
  std::span<const int> of(std::size_t row) const {
    return {index.data() + offsets[row], static_cast<std::size_t>(offsets[row + 1] - offsets[row])};
  }
  // Nodes with at least one neighbour.
  std::size_t counted() const;
};

// A graph prepared for the model.
struct Sample {
  std::string function_id;
  features::NodeFeatures features;
  ggnn::Topology topology;
  Neighborhoods neighborhoods;
  int label = 0;
  std::vector<std::string> cwe_tags;
  cpg::Split split = cpg::Split::kTrain;
};

Sample make_sample(const cpg::CodePropertyGraph& graph, cpg::Split split, const features::TypeVocabulary& vocab,
                   const features::EmbeddingProvider& provider);

}  // namespace vulgraph
