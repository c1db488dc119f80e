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

// Planted-motif corpus for smoke tests and ablations. Every function is a
// small random CPG; vulnerable ones contain an unchecked buffer copy node and
// safe ones a bounds check in the same position.

#include <cstdint>
#include <vector>

#include "core/cpg.hpp"

namespace vulgraph::synthetic {

struct Options {
  std::size_t count = 32;
  std::uint64_t seed = 1;
  int min_nodes = 6;
  int max_nodes = 14;
  double valid_fraction = 0.0;
  double test_fraction = 0.0;
  // Probability that a graph's planted motif disagrees with its label.
  double label_noise = 0.0;
};

inline constexpr const char* kVulnerableType = "BufferCopy";
inline constexpr const char* kSafeType = "BoundsCheck";

// Labels alternate 1, 0, 1, ... so the classes stay balanced. Splits are
// assigned per class so each split keeps both labels when large enough.
std::vector<cpg::CorpusRecord> make_corpus(const Options& options);

cpg::CodePropertyGraph make_graph(std::size_t index, int label, bool plant_vulnerable, std::uint64_t seed,
                                  int min_nodes, int max_nodes);

}  // namespace vulgraph::synthetic
