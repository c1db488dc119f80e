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

#include "core/ggnn.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <random>

#include "core/errors.hpp"

namespace vulgraph::ggnn {

int relation_index(cpg::EdgeKind kind, Direction dir) noexcept {
  return static_cast<int>(kind) * 2 + static_cast<int>(dir);
}

std::string relation_name(int relation) {
  const auto kind = static_cast<cpg::EdgeKind>(relation / 2);
  return std::string(cpg::edge_kind_name(kind)) + (relation % 2 == 0 ? ".fwd" : ".rev");
}

Topology Topology::from_graph(const cpg::CodePropertyGraph& graph) {
  Topology t;
  t.nodes = static_cast<Eigen::Index>(graph.node_count());
  for (const auto& e : graph.edges) {
    const int s = static_cast<int>(*graph.index_of(e.src));
    const int d = static_cast<int>(*graph.index_of(e.dst));
    Relation& fwd = t.relations[relation_index(e.kind, Direction::kForward)];
    fwd.src.push_back(s);
    fwd.dst.push_back(d);
    Relation& rev = t.relations[relation_index(e.kind, Direction::kReverse)];
    rev.src.push_back(d);
    rev.dst.push_back(s);
  }
  return t;
}

void Architecture::validate() const {
  if (feature_dim < 1) throw ConfigError("feature dim must be >= 1");
  if (state_dim < feature_dim)
    throw DimensionError("state_dim " + std::to_string(state_dim) + " < feature dim " + std::to_string(feature_dim));
  if (steps < 1) throw ConfigError("ggnn.steps must be >= 1");
  if (readout_layers < 1) throw ConfigError("readout.layers must be >= 1");
  if (conv_width < 1) throw ConfigError("readout.conv_width must be >= 1");
  if (pool_window < 1) throw ConfigError("readout.pool_window must be >= 1");
  if (classes != 2) throw ConfigError("only binary classification is supported");
}

int Architecture::receptive_field() const {
  int len = 1;
  for (int i = 0; i < readout_layers; ++i) len = len * pool_window + (conv_width - 1);
  return len;
}

std::size_t StudentParams::parameter_count() const {
  std::size_t n = 0;
  for_each([&](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

namespace {

StudentParams shaped(const Architecture& arch) {
  arch.validate();
  const Eigen::Index z = arch.state_dim;
  const Eigen::Index cz = arch.state_dim + arch.feature_dim;
  const Eigen::Index k = arch.conv_width;
  StudentParams p;
  for (auto& m : p.ggnn.message) m = Matrix::Zero(z, z);
  p.ggnn.bias = Matrix::Zero(1, z);
  for (Matrix* m : {&p.ggnn.wz, &p.ggnn.uz, &p.ggnn.wr, &p.ggnn.ur, &p.ggnn.w, &p.ggnn.u}) *m = Matrix::Zero(z, z);
  for (int i = 0; i < arch.readout_layers; ++i) {
    p.readout.conv_z.push_back({Matrix::Zero(cz, k * cz), Matrix::Zero(1, cz)});
    p.readout.conv_y.push_back({Matrix::Zero(z, k * z), Matrix::Zero(1, z)});
  }
  p.readout.mlp_z_w = Matrix::Zero(arch.classes, cz);
  p.readout.mlp_z_b = Matrix::Zero(1, arch.classes);
  p.readout.mlp_y_w = Matrix::Zero(arch.classes, z);
  p.readout.mlp_y_b = Matrix::Zero(1, arch.classes);
  return p;
}

bool is_bias(const std::string& name) { return name == "b" || name.ends_with(".bias"); }

}  // namespace

StudentParams init_student(const Architecture& arch, std::uint64_t seed) {
  StudentParams p = shaped(arch);
  std::mt19937_64 rng(seed);
  p.for_each([&](const std::string& name, Matrix& m) {
    if (is_bias(name)) return;
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = u(rng);
  });
  return p;
}

StudentParams init_student_normal(const Architecture& arch, std::uint64_t seed, double stddev) {
  StudentParams p = shaped(arch);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  p.for_each([&](const std::string&, Matrix& m) {
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = normal(rng);
  });
  return p;
}

void check_shapes(const Architecture& arch, const StudentParams& params) {
  const StudentParams ref = shaped(arch);
  std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> want;
  ref.for_each([&](const std::string& name, const Matrix& m) { want.push_back({name, {m.rows(), m.cols()}}); });
  std::size_t i = 0;
  params.for_each([&](const std::string& name, const Matrix& m) {
    if (i >= want.size() || want[i].first != name)
      throw DimensionError("unexpected tensor '" + name + "' for this architecture");
    if (m.rows() != want[i].second.first || m.cols() != want[i].second.second)
      throw DimensionError("tensor '" + name + "' is " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                           ", architecture expects " + std::to_string(want[i].second.first) + "x" +
                           std::to_string(want[i].second.second));
    ++i;
  });
  if (i != want.size()) throw DimensionError("student is missing tensors for this architecture");
}

BoundStudent bind(ad::Tape& tape, const StudentParams& params, bool trainable) {
  BoundStudent s;
  auto leaf = [&](const Matrix& m) {
    Var v = trainable ? tape.parameter(m) : tape.constant(m);
    s.leaves.push_back(v);
    return v;
  };
  for (int r = 0; r < kRelationCount; ++r) s.message[r] = leaf(params.ggnn.message[r]);
  s.bias = leaf(params.ggnn.bias);
  s.wz = leaf(params.ggnn.wz);
  s.uz = leaf(params.ggnn.uz);
  s.wr = leaf(params.ggnn.wr);
  s.ur = leaf(params.ggnn.ur);
  s.w = leaf(params.ggnn.w);
  s.u = leaf(params.ggnn.u);
  for (const auto& c : params.readout.conv_z) {
    Var w = leaf(c.weight);
    s.conv_z.emplace_back(w, leaf(c.bias));
  }
  for (const auto& c : params.readout.conv_y) {
    Var w = leaf(c.weight);
    s.conv_y.emplace_back(w, leaf(c.bias));
  }
  s.mlp_z_w = leaf(params.readout.mlp_z_w);
  s.mlp_z_b = leaf(params.readout.mlp_z_b);
  s.mlp_y_w = leaf(params.readout.mlp_y_w);
  s.mlp_y_b = leaf(params.readout.mlp_y_b);
  return s;
}

Var aggregate_messages(const BoundStudent& s, const Topology& topo, Var h_prev) {
  if (h_prev.rows() != topo.nodes || h_prev.cols() != s.bias.cols())
    throw DimensionError("aggregate_messages: state is " + std::to_string(h_prev.rows()) + "x" +
                         std::to_string(h_prev.cols()) + ", expected " + std::to_string(topo.nodes) + "x" +
                         std::to_string(s.bias.cols()));
  ad::Tape& tape = *h_prev.tape();
  Var total = tape.constant(Matrix::Zero(topo.nodes, h_prev.cols()));
  for (int r = 0; r < kRelationCount; ++r) {
    const Relation& rel = topo.relations[r];
    if (rel.src.empty()) continue;
    Var gathered = ad::edge_sum(h_prev, rel.src, rel.dst, topo.nodes);
    total = ad::add(total, ad::matmul_nt(gathered, s.message[r]));
  }
  return ad::add_row(total, s.bias);
}

Var gru_update(const BoundStudent& s, Var messages, Var h_prev) {
  using namespace ad;
  Var z = sigmoid(add(matmul_nt(messages, s.wz), matmul_nt(h_prev, s.uz)));
  Var r = sigmoid(add(matmul_nt(messages, s.wr), matmul_nt(h_prev, s.ur)));
  Var candidate = tanh(add(matmul_nt(messages, s.w), matmul_nt(hadamard(r, h_prev), s.u)));
  return add(hadamard(one_minus(z), h_prev), hadamard(z, candidate));
}

namespace {

std::vector<Var> propagate_ggnn(const BoundStudent& s, const Topology& topo, Var h1, int steps) {
  std::vector<Var> states{h1};
  for (int t = 1; t < steps; ++t) {
    Var h = states.back();
    states.push_back(gru_update(s, aggregate_messages(s, topo, h), h));
  }
  return states;
}

struct Registry {
  std::mutex mutex;
  std::map<std::string, PropagationFn> fns{{"ggnn", propagate_ggnn}};
};

Registry& registry() {
  static Registry r;
  return r;
}

Var conv_stack(const std::vector<std::pair<Var, Var>>& layers, const Architecture& arch, Var in) {
  Var cur = in;
  for (const auto& [w, b] : layers) {
    Var conv = ad::add_row(ad::matmul_nt(ad::im2col(cur, arch.conv_width), w), b);
    cur = ad::maxpool_rows(ad::relu(conv), arch.pool_window);
  }
  return cur;
}

}  // namespace

std::vector<Var> propagate(const BoundStudent& s, const Topology& topo, Var h1, int steps) {
  if (steps < 1) throw ConfigError("propagate: steps must be >= 1");
  return propagate_ggnn(s, topo, h1, steps);
}

void register_propagation(const std::string& name, PropagationFn fn) {
  std::lock_guard<std::mutex> lock(registry().mutex);
  registry().fns[name] = std::move(fn);
}

const PropagationFn& find_propagation(const std::string& name) {
  std::lock_guard<std::mutex> lock(registry().mutex);
  auto it = registry().fns.find(name);
  if (it == registry().fns.end()) throw ConfigError("no propagation registered under '" + name + "'");
  return it->second;
}

Var readout(const BoundStudent& s, const Architecture& arch, Var h_last, Var x) {
  if (h_last.rows() != x.rows()) throw DimensionError("readout: state and feature row counts differ");
  const Eigen::Index len = std::max<Eigen::Index>(h_last.rows(), arch.receptive_field());
  Var z_in = ad::pad_rows(ad::hconcat(h_last, x), len);
  Var y_in = ad::pad_rows(h_last, len);
  Var z = conv_stack(s.conv_z, arch, z_in);
  Var y = conv_stack(s.conv_y, arch, y_in);
  Var z_out = ad::add_row(ad::matmul_nt(z, s.mlp_z_w), s.mlp_z_b);
  Var y_out = ad::add_row(ad::matmul_nt(y, s.mlp_y_w), s.mlp_y_b);
  return ad::mean_rows(ad::hadamard(z_out, y_out));
}

Vector softmax(const Vector& scores) {
  const double m = scores.maxCoeff();
  Vector e = (scores.array() - m).exp();
  return e / e.sum();
}

Matrix aggregate_messages(const StudentParams& params, const Topology& topo, const Matrix& h_prev) {
  ad::Tape tape;
  BoundStudent s = bind(tape, params, false);
  return aggregate_messages(s, topo, tape.constant(h_prev)).value();
}

Matrix gru_update(const StudentParams& params, const Matrix& messages, const Matrix& h_prev) {
  ad::Tape tape;
  BoundStudent s = bind(tape, params, false);
  return gru_update(s, tape.constant(messages), tape.constant(h_prev)).value();
}

PropagationTrace propagate(const StudentParams& params, const Topology& topo, const Matrix& h1, int steps) {
  ad::Tape tape;
  BoundStudent s = bind(tape, params, false);
  PropagationTrace trace;
  for (const Var& v : propagate(s, topo, tape.constant(h1), steps)) trace.states.push_back(v.value());
  return trace;
}

Vector graph_embedding_sum(const Matrix& h_last) { return h_last.colwise().sum().transpose(); }

GraphLogits readout(const PropagationTrace& trace, const Matrix& x, const StudentParams& params,
                    const Architecture& arch) {
  if (trace.states.empty()) throw PreconditionError("readout needs a non-empty trace");
  ad::Tape tape;
  BoundStudent s = bind(tape, params, false);
  Var logits = readout(s, arch, tape.constant(trace.states.back()), tape.constant(x));
  GraphLogits out;
  out.scores = logits.value().row(0).transpose();
  out.probabilities = softmax(out.scores);
  return out;
}

}  // namespace vulgraph::ggnn
