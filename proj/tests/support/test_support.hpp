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

// Shared helpers for unit and acceptance tests: random graphs, finite
// differences and small model factories.

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/cpg.hpp"
#include "core/featurize.hpp"
#include "core/ggnn.hpp"
#include "core/sample.hpp"

namespace vgtest {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Random CPG with ids 1..n (shuffled insertion order is irrelevant after parsing).
inline vulgraph::cpg::CodePropertyGraph random_graph(std::mt19937_64& rng, int n, int extra_edges,
                                                     bool allow_self_loops = false) {
  using namespace vulgraph::cpg;
  static const char* types[] = {"Identifier", "Literal", "Call", "Assignment", "Return"};
  CodePropertyGraph g;
  g.function_id = "g";
  for (int i = 1; i <= n; ++i) g.nodes.push_back({i, types[rng() % 5], "x" + std::to_string(i), true});
  std::uniform_int_distribution<int> pick(1, n);
  for (int i = 2; i <= n; ++i) g.edges.push_back({std::uniform_int_distribution<int>(1, i - 1)(rng), i, EdgeKind::kAst});
  for (int e = 0; e < extra_edges; ++e) {
    const int a = pick(rng), b = pick(rng);
    if (a == b && !allow_self_loops) continue;
    g.edges.push_back({a, b, kEdgeKinds[rng() % 4]});
  }
  std::sort(g.edges.begin(), g.edges.end());
  g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
  for (auto& node : g.nodes)
    node.is_leaf = std::none_of(g.edges.begin(), g.edges.end(),
                                [&](const CodeEdge& e) { return e.src == node.id && e.kind == EdgeKind::kAst; });
  g.source_code = "f();";
  g.content_hash = md5_hex(g.source_code);
  return g;
}

// Central difference of f at every entry of every parameter.
inline std::vector<Matrix> numeric_gradient(std::vector<Matrix>& params, const std::function<double()>& f,
                                            double eps = 1e-4) {
  std::vector<Matrix> grads;
  for (auto& p : params) {
    Matrix g(p.rows(), p.cols());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double keep = p.data()[i];
      p.data()[i] = keep + eps;
      const double up = f();
      p.data()[i] = keep - eps;
      const double down = f();
      p.data()[i] = keep;
      g.data()[i] = (up - down) / (2.0 * eps);
    }
    grads.push_back(g);
  }
  return grads;
}

// ||a - n|| / max(||a|| + ||n||, tiny) over all entries.
inline double relative_error(const std::vector<Matrix>& analytic, const std::vector<Matrix>& numeric) {
  double diff = 0.0, norm_a = 0.0, norm_n = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]).squaredNorm();
    norm_a += analytic[i].squaredNorm();
    norm_n += numeric[i].squaredNorm();
  }
  return std::sqrt(diff) / std::max(std::sqrt(norm_a) + std::sqrt(norm_n), 1e-300);
}

// Sample with a one-column type block and random content, built directly so
// the feature width stays tiny.
inline vulgraph::Sample tiny_sample(std::mt19937_64& rng, const vulgraph::cpg::CodePropertyGraph& g, int feature_dim,
                                    int label) {
  vulgraph::Sample s;
  s.function_id = g.function_id;
  const auto n = static_cast<Eigen::Index>(g.node_count());
  for (const auto& node : g.nodes) s.features.node_ids.push_back(node.id);
  s.features.type_onehot = Matrix::Ones(n, 1);
  s.features.content = random_matrix(rng, n, feature_dim - 1);
  s.features.sequence = Vector::Zero(2);
  s.topology = vulgraph::ggnn::Topology::from_graph(g);
  s.neighborhoods = vulgraph::Neighborhoods::from_graph(g);
  s.label = label;
  return s;
}

// Undirected neighbour rows without self loops, ascending; computed from the raw edge list.
inline std::vector<std::vector<int>> neighbor_rows(const vulgraph::cpg::CodePropertyGraph& g) {
  std::vector<std::vector<int>> nb(g.node_count());
  for (std::size_t i = 0; i < g.node_count(); ++i)
    for (std::size_t j = 0; j < g.node_count(); ++j) {
      if (i == j) continue;
      const bool linked = std::any_of(g.edges.begin(), g.edges.end(), [&](const vulgraph::cpg::CodeEdge& e) {
        return (e.src == g.nodes[i].id && e.dst == g.nodes[j].id) || (e.src == g.nodes[j].id && e.dst == g.nodes[i].id);
      });
      if (linked) nb[i].push_back(static_cast<int>(j));
    }
  return nb;
}

// Ten records over three CWE tags. Hand tally:
//   CWE-120: records 0 1 2 8, 3 correct -> 4, 0.75
//   CWE-787: records 2 3 4,   2 correct -> 3, 2/3
//   CWE-476: records 5 9,     1 correct -> 2, 0.5 (record 9 repeats its tag)
//   untagged: records 6 7,    1 correct -> 2, 0.5
struct CweFixture {
  std::vector<int> preds{1, 0, 1, 1, 0, 1, 0, 1, 1, 0};
  std::vector<int> labels{1, 1, 1, 0, 0, 1, 0, 0, 1, 1};
  std::vector<std::vector<std::string>> tags{{"CWE-120"}, {"CWE-120"}, {"CWE-120", "CWE-787"}, {"CWE-787"},
                                             {"CWE-787"}, {"CWE-476"}, {},          {},
                                             {"CWE-120"}, {"CWE-476", "CWE-476"}};
};

}  // namespace vgtest
