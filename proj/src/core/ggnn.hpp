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

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/cpg.hpp"

namespace vulgraph::ggnn {

using ad::Matrix;
using ad::Var;
using ad::Vector;

enum class Direction : std::uint8_t { kForward = 0, kReverse = 1 };

// One message matrix per (edge kind, direction).
inline constexpr int kRelationCount = 8;
int relation_index(cpg::EdgeKind kind, Direction dir) noexcept;
// "AST.fwd", "AST.rev", ...
std::string relation_name(int relation);

// Message routing in node-row space: along relation r, row src[e] sends to dst[e].
struct Relation {
  std::vector<int> src;
  std::vector<int> dst;
};

struct Topology {
  Eigen::Index nodes = 0;
  std::array<Relation, kRelationCount> relations;

  // Forward relations follow the edge; reverse relations run dst -> src.
  static Topology from_graph(const cpg::CodePropertyGraph& graph);
};

struct Architecture {
  int feature_dim = 0;  // d
  int state_dim = 0;    // z >= d
  int steps = 6;        // T snapshots, T - 1 GRU updates
  int readout_layers = 2;
  int conv_width = 3;
  int pool_window = 2;
  int classes = 2;
  std::string propagation = "ggnn";

  void validate() const;
  // Shortest node sequence that survives every conv/pool layer.
  int receptive_field() const;
};

struct GgnnParams {
  std::array<Matrix, kRelationCount> message;  // z x z
  Matrix bias;                                 // 1 x z
  Matrix wz, uz, wr, ur, w, u;                 // z x z
};

struct ConvLayer {
  Matrix weight;  // C x (width * C)
  Matrix bias;    // 1 x C
};

struct ReadoutParams {
  std::vector<ConvLayer> conv_z;  // channels z + d
  std::vector<ConvLayer> conv_y;  // channels z
  Matrix mlp_z_w, mlp_z_b;        // classes x (z + d), 1 x classes
  Matrix mlp_y_w, mlp_y_b;        // classes x z, 1 x classes
};

struct StudentParams {
  GgnnParams ggnn;
  ReadoutParams readout;

  // Calls fn(name, matrix) for every tensor in a fixed order.
  template <typename Self, typename Fn>
  static void visit(Self& self, Fn&& fn);
  template <typename Fn>
  void for_each(Fn&& fn) { visit(*this, fn); }
  template <typename Fn>
  void for_each(Fn&& fn) const { visit(*this, fn); }

  std::size_t parameter_count() const;
};

// Glorot-uniform weights, zero biases; deterministic in `seed`.
StudentParams init_student(const Architecture& arch, std::uint64_t seed);
// Every weight and bias drawn from N(0, stddev^2).
StudentParams init_student_normal(const Architecture& arch, std::uint64_t seed, double stddev);
void check_shapes(const Architecture& arch, const StudentParams& params);

// Student tensors bound to a tape; `trainable` makes them gradient leaves.
struct BoundStudent {
  std::array<Var, kRelationCount> message;
  Var bias, wz, uz, wr, ur, w, u;
  std::vector<std::pair<Var, Var>> conv_z, conv_y;
  Var mlp_z_w, mlp_z_b, mlp_y_w, mlp_y_b;
  std::vector<Var> leaves;  // same order as StudentParams::for_each
};
BoundStudent bind(ad::Tape& tape, const StudentParams& params, bool trainable);

// Row v = sum over relations and senders u of A_r h_u, plus b.
Var aggregate_messages(const BoundStudent& s, const Topology& topo, Var h_prev);
// GRU with update gate z and reset gate r.
Var gru_update(const BoundStudent& s, Var messages, Var h_prev);
// [H1, ..., HT]; HT from T - 1 updates.
std::vector<Var> propagate(const BoundStudent& s, const Topology& topo, Var h1, int steps);
// Class scores (1 x classes) from the last state and the node features.
Var readout(const BoundStudent& s, const Architecture& arch, Var h_last, Var x);

// Swappable propagation for architecture comparisons.
using PropagationFn = std::function<std::vector<Var>(const BoundStudent&, const Topology&, Var h1, int steps)>;
void register_propagation(const std::string& name, PropagationFn fn);
const PropagationFn& find_propagation(const std::string& name);

// Value-level wrappers.
struct PropagationTrace {
  std::vector<Matrix> states;
};

struct GraphLogits {
  Vector scores;
  Vector probabilities;
};

Vector softmax(const Vector& scores);

Matrix aggregate_messages(const StudentParams& params, const Topology& topo, const Matrix& h_prev);
Matrix gru_update(const StudentParams& params, const Matrix& messages, const Matrix& h_prev);
PropagationTrace propagate(const StudentParams& params, const Topology& topo, const Matrix& h1, int steps);
Vector graph_embedding_sum(const Matrix& h_last);
GraphLogits readout(const PropagationTrace& trace, const Matrix& x, const StudentParams& params,
                    const Architecture& arch);

// ---------------------------------------------------------------------------

template <typename Self, typename Fn>
void StudentParams::visit(Self& self, Fn&& fn) {
  for (int r = 0; r < kRelationCount; ++r) fn("A." + relation_name(r), self.ggnn.message[r]);
  fn(std::string("b"), self.ggnn.bias);
  fn(std::string("gru.Wz"), self.ggnn.wz);
  fn(std::string("gru.Uz"), self.ggnn.uz);
  fn(std::string("gru.Wr"), self.ggnn.wr);
  fn(std::string("gru.Ur"), self.ggnn.ur);
  fn(std::string("gru.W"), self.ggnn.w);
  fn(std::string("gru.U"), self.ggnn.u);
  for (std::size_t i = 0; i < self.readout.conv_z.size(); ++i) {
    fn("readout.conv_z." + std::to_string(i) + ".weight", self.readout.conv_z[i].weight);
    fn("readout.conv_z." + std::to_string(i) + ".bias", self.readout.conv_z[i].bias);
  }
  for (std::size_t i = 0; i < self.readout.conv_y.size(); ++i) {
    fn("readout.conv_y." + std::to_string(i) + ".weight", self.readout.conv_y[i].weight);
    fn("readout.conv_y." + std::to_string(i) + ".bias", self.readout.conv_y[i].bias);
  }
  fn(std::string("readout.mlp_z.weight"), self.readout.mlp_z_w);
  fn(std::string("readout.mlp_z.bias"), self.readout.mlp_z_b);
  fn(std::string("readout.mlp_y.weight"), self.readout.mlp_y_w);
  fn(std::string("readout.mlp_y.bias"), self.readout.mlp_y_b);
}

}  // namespace vulgraph::ggnn
