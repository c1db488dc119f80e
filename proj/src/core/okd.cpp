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

#include "core/okd.hpp"

#include <cmath>

#include "core/errors.hpp"

namespace vulgraph::okd {

const char* kernel_name(KernelKind kind) noexcept {
  switch (kind) {
    case KernelKind::kEuclidean: return "euclidean";
    case KernelKind::kLinear: return "linear";
    case KernelKind::kPoly: return "poly";
    case KernelKind::kRbf: return "rbf";
  }
  return "?";
}

KernelKind parse_kernel(std::string_view name) {
  for (KernelKind k : {KernelKind::kEuclidean, KernelKind::kLinear, KernelKind::kPoly, KernelKind::kRbf})
    if (name == kernel_name(k)) return k;
  throw ConfigError("unknown kernel '" + std::string(name) + "' (expected euclidean, linear, poly or rbf)");
}

void KernelSpec::validate() const {
  if (!(sigma > 0.0)) throw ConfigError("kd.sigma must be > 0");
  if (poly_degree < 1) throw ConfigError("kd.poly_degree must be >= 1");
}

void KdConfig::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("kd.alpha must be a finite value >= 0");
  if (students < 1) throw ConfigError("kd.students must be >= 1");
  kernel.validate();
}

double kernel_similarity(const Vector& zi, const Vector& zj, const KernelSpec& spec) {
  if (zi.size() != zj.size())
    throw DimensionError("kernel_similarity: lengths " + std::to_string(zi.size()) + " and " +
                         std::to_string(zj.size()));
  switch (spec.kind) {
    case KernelKind::kEuclidean: return (zi - zj).squaredNorm();
    case KernelKind::kLinear: return zi.dot(zj);
    case KernelKind::kPoly: return std::pow(zi.dot(zj) + spec.poly_c, spec.poly_degree);
    case KernelKind::kRbf: return std::exp(-(zi - zj).squaredNorm() / (2.0 * spec.sigma));
  }
  return 0.0;
}

std::optional<LocalStructure> local_structure(std::int64_t node_id, const Vector& zi,
                                              std::span<const std::int64_t> neighbor_ids,
                                              const Matrix& neighbor_states, const KernelSpec& spec) {
  if (neighbor_ids.empty()) return std::nullopt;
  if (static_cast<Eigen::Index>(neighbor_ids.size()) != neighbor_states.rows())
    throw DimensionError("local_structure: neighbour ids and states differ in count");
  const auto m = static_cast<Eigen::Index>(neighbor_ids.size());
  Vector d(m);
  for (Eigen::Index j = 0; j < m; ++j) d(j) = kernel_similarity(zi, neighbor_states.row(j).transpose(), spec);
  // exp(D_j) / sum exp(D), evaluated with the max subtracted.
  const double shift = d.maxCoeff();
  Vector e = (d.array() - shift).exp();
  LocalStructure ls;
  ls.node_id = node_id;
  ls.neighbor_ids.assign(neighbor_ids.begin(), neighbor_ids.end());
  ls.probs = e / e.sum();
  return ls;
}

std::vector<LocalStructure> local_structures(const Matrix& states, const Neighborhoods& nb,
                                             std::span<const std::int64_t> node_ids, const KernelSpec& spec) {
  if (static_cast<std::size_t>(states.rows()) != nb.nodes() || node_ids.size() != nb.nodes())
    throw DimensionError("local_structures: state rows do not match the graph");
  std::vector<LocalStructure> out;
  for (std::size_t i = 0; i < nb.nodes(); ++i) {
    auto rows = nb.of(i);
    if (rows.empty()) continue;
    Matrix neigh(static_cast<Eigen::Index>(rows.size()), states.cols());
    std::vector<std::int64_t> ids;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      neigh.row(static_cast<Eigen::Index>(j)) = states.row(rows[j]);
      ids.push_back(node_ids[static_cast<std::size_t>(rows[j])]);
    }
    out.push_back(*local_structure(node_ids[i], states.row(static_cast<Eigen::Index>(i)).transpose(), ids, neigh, spec));
  }
  return out;
}

double lsp_divergence(const LocalStructure& target, const LocalStructure& learner) {
  if (target.node_id != learner.node_id || target.neighbor_ids != learner.neighbor_ids ||
      target.probs.size() != learner.probs.size())
    throw AlignmentError("lsp_divergence: structures for node " + std::to_string(target.node_id) + " and " +
                         std::to_string(learner.node_id) + " have different neighbourhoods");
  double kl = 0.0;
  for (Eigen::Index j = 0; j < target.probs.size(); ++j) {
    const double t = target.probs(j);
    if (t <= 0.0) continue;
    kl += t * std::log(t / learner.probs(j));
  }
  return kl;
}

namespace {

void check_alignment(std::size_t k, const std::vector<std::vector<Trace>>& traces, std::size_t graphs) {
  if (k >= traces.size()) throw AlignmentError("student index out of range");
  std::optional<std::size_t> layers;
  for (std::size_t p = 0; p < traces.size(); ++p) {
    if (traces[p].empty() && p != k) throw AlignmentError("missing traces for student " + std::to_string(p));
    if (traces[p].empty()) continue;
    if (traces[p].size() != graphs) throw AlignmentError("student " + std::to_string(p) + " traced a different batch");
    for (const auto& t : traces[p]) {
      if (!layers) layers = t.size();
      if (t.size() != *layers || t.empty())
        throw AlignmentError("trace length mismatch: " + std::to_string(t.size()) + " vs " + std::to_string(*layers));
    }
  }
}

std::vector<std::int64_t> row_ids(std::size_t n) {
  std::vector<std::int64_t> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = static_cast<std::int64_t>(i);
  return ids;
}

std::size_t counted_nodes(std::span<const Neighborhoods* const> graphs) {
  std::size_t n = 0;
  for (const auto* g : graphs) n += g->counted();
  return n;
}

}  // namespace

double cross_layer_loss(std::size_t k, const std::vector<std::vector<Trace>>& traces,
                        std::span<const Neighborhoods* const> graphs, const KernelSpec& spec) {
  check_alignment(k, traces, graphs.size());
  const std::size_t students = traces.size();
  const std::size_t n_counted = counted_nodes(graphs);
  if (students < 2 || n_counted == 0) return 0.0;
  const std::size_t layers = traces[k].front().size();
  double total = 0.0;
  for (std::size_t i = 0; i < layers; ++i) {
    double layer_sum = 0.0;
    for (std::size_t p = 0; p < students; ++p) {
      if (p == k) continue;
      for (std::size_t g = 0; g < graphs.size(); ++g) {
        const auto ids = row_ids(graphs[g]->nodes());
        const auto learner = local_structures(traces[k][g][i], *graphs[g], ids, spec);
        const auto target = local_structures(traces[p][g][aligned_layer(i, layers)], *graphs[g], ids, spec);
        for (std::size_t j = 0; j < learner.size(); ++j) layer_sum += lsp_divergence(target[j], learner[j]);
      }
    }
    total += layer_sum / static_cast<double>(students - 1) / static_cast<double>(n_counted);
  }
  return total;
}

namespace {

struct PairIndex {
  std::vector<int> left, right, offsets;
};

PairIndex pairs_of(const Neighborhoods& nb) {
  PairIndex p;
  p.offsets.push_back(0);
  for (std::size_t i = 0; i < nb.nodes(); ++i) {
    auto rows = nb.of(i);
    if (rows.empty()) continue;
    for (int j : rows) {
      p.left.push_back(static_cast<int>(i));
      p.right.push_back(j);
    }
    p.offsets.push_back(static_cast<int>(p.left.size()));
  }
  return p;
}

Var pair_kernel(Var h, const PairIndex& pairs, const KernelSpec& spec) {
  Var zi = ad::gather_rows(h, pairs.left);
  Var zj = ad::gather_rows(h, pairs.right);
  switch (spec.kind) {
    case KernelKind::kEuclidean: {
      Var diff = ad::sub(zi, zj);
      return ad::sum_cols(ad::hadamard(diff, diff));
    }
    case KernelKind::kLinear: return ad::sum_cols(ad::hadamard(zi, zj));
    case KernelKind::kPoly:
      return ad::pow_int(ad::add_scalar(ad::sum_cols(ad::hadamard(zi, zj)), spec.poly_c), spec.poly_degree);
    case KernelKind::kRbf: {
      Var diff = ad::sub(zi, zj);
      return ad::exp(ad::scale(ad::sum_cols(ad::hadamard(diff, diff)), -1.0 / (2.0 * spec.sigma)));
    }
  }
  throw ConfigError("unknown kernel");
}

}  // namespace

Var cross_layer_loss(const std::vector<std::vector<Var>>& learner, std::size_t k,
                     const std::vector<std::vector<Trace>>& traces, std::span<const Neighborhoods* const> graphs,
                     const KernelSpec& spec) {
  if (learner.size() != graphs.size()) throw AlignmentError("learner traced a different batch");
  if (learner.empty()) throw AlignmentError("empty batch");
  ad::Tape& tape = *learner.front().front().tape();
  const std::size_t students = traces.size();
  const std::size_t n_counted = counted_nodes(graphs);
  if (students < 2 || n_counted == 0) return tape.constant(Matrix::Zero(1, 1));
  const std::size_t layers = learner.front().size();
  for (std::size_t p = 0; p < students; ++p) {
    if (p == k) continue;
    if (traces[p].size() != graphs.size()) throw AlignmentError("student " + std::to_string(p) + " traced a different batch");
    for (std::size_t g = 0; g < graphs.size(); ++g)
      if (traces[p][g].size() != layers || learner[g].size() != layers)
        throw AlignmentError("trace length mismatch: " + std::to_string(traces[p][g].size()) + " vs " +
                             std::to_string(layers));
  }

  std::vector<Var> terms;
  double entropy = 0.0;
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const PairIndex pairs = pairs_of(*graphs[g]);
    if (pairs.left.empty()) continue;
    const auto ids = row_ids(graphs[g]->nodes());
    for (std::size_t i = 0; i < layers; ++i) {
      Var logq = ad::segment_log_softmax(pair_kernel(learner[g][i], pairs, spec), pairs.offsets);
      Matrix weights = Matrix::Zero(logq.rows(), 1);
      for (std::size_t p = 0; p < students; ++p) {
        if (p == k) continue;
        const auto target = local_structures(traces[p][g][aligned_layer(i, layers)], *graphs[g], ids, spec);
        Eigen::Index at = 0;
        for (const auto& ls : target) {
          for (Eigen::Index j = 0; j < ls.probs.size(); ++j, ++at) {
            const double t = ls.probs(j);
            if (t <= 0.0) continue;
            weights(at, 0) -= t;
            entropy += t * std::log(t);
          }
        }
      }
      terms.push_back(ad::weighted_sum(logq, weights));
    }
  }
  Var sum = terms.front();
  for (std::size_t i = 1; i < terms.size(); ++i) sum = ad::add(sum, terms[i]);
  const double norm = 1.0 / (static_cast<double>(students - 1) * static_cast<double>(n_counted));
  return ad::scale(ad::add_scalar(sum, entropy), norm);
}

double total_student_loss(double ce, double str, double alpha) { return ce + alpha * str; }

std::size_t select_inference_student(std::span<const double> validation_f1) {
  if (validation_f1.empty()) throw PreconditionError("no validation scores to select from");
  std::size_t best = 0;
  for (std::size_t i = 1; i < validation_f1.size(); ++i)
    if (validation_f1[i] > validation_f1[best]) best = i;
  return best;
}

namespace {

Var initial_state(ad::Tape& tape, Var x, Eigen::Index state_dim) {
  if (x.cols() > state_dim)
    throw DimensionError("feature dim " + std::to_string(x.cols()) + " exceeds state dim " + std::to_string(state_dim));
  if (x.cols() == state_dim) return x;
  return ad::hconcat(x, tape.constant(Matrix::Zero(x.rows(), state_dim - x.cols())));
}

}  // namespace

StudentOutput run_student(const ggnn::StudentParams& params, const ggnn::Architecture& arch, const Sample& sample,
                          const Matrix& x) {
  ad::Tape tape;
  const ggnn::BoundStudent s = ggnn::bind(tape, params, false);
  Var xv = tape.constant(x);
  const auto states = ggnn::find_propagation(arch.propagation)(s, sample.topology,
                                                               initial_state(tape, xv, arch.state_dim), arch.steps);
  StudentOutput out;
  for (const Var& v : states) out.trace.push_back(v.value());
  Var logits = ggnn::readout(s, arch, states.back(), xv);
  out.probabilities = ggnn::softmax(logits.value().row(0).transpose());
  return out;
}

PhaseResult student_phase(const StudentEnsemble& ensemble, std::size_t k, std::span<const Sample* const> batch,
                          const KdConfig& config, PhaseHooks& hooks, bool with_grads, bool update_shared) {
  if (batch.empty()) throw DataError("empty batch");
  if (k >= ensemble.size()) throw PreconditionError("student index out of range");
  const auto& arch = ensemble.arch;
  const std::size_t students = ensemble.size();
  const bool use_kd = students > 1 && config.alpha != 0.0;

  std::vector<std::vector<Trace>> traces(students);
  if (use_kd) {
    for (std::size_t p = 0; p < students; ++p) {
      if (p == k) continue;
      for (const Sample* s : batch)
        traces[p].push_back(run_student(ensemble.students[p], arch, *s, hooks.feature_values(*s)).trace);
    }
  }

  ad::Tape tape;
  hooks.begin_phase(tape);
  const ggnn::BoundStudent bound = ggnn::bind(tape, ensemble.students[k], with_grads);
  const auto& propagate = ggnn::find_propagation(arch.propagation);

  std::vector<std::vector<Var>> learner;
  std::vector<const Neighborhoods*> graphs;
  Var ce_sum;
  for (const Sample* s : batch) {
    Var x = hooks.features(tape, *s);
    auto states = propagate(bound, s->topology, initial_state(tape, x, arch.state_dim), arch.steps);
    Var logp = ad::log_softmax_rows(ggnn::readout(bound, arch, states.back(), x));
    Matrix target = Matrix::Zero(1, logp.cols());
    target(0, s->label) = -1.0;
    Var ce = ad::weighted_sum(logp, target);
    ce_sum = ce_sum.valid() ? ad::add(ce_sum, ce) : ce;
    learner.push_back(std::move(states));
    graphs.push_back(&s->neighborhoods);
  }
  Var total = ad::scale(ce_sum, hooks.graph_weight() / static_cast<double>(batch.size()));
  if (auto extra = hooks.extra_loss(tape, batch)) total = ad::add(total, *extra);
  const double ce_value = total.scalar();

  double str_value = 0.0;
  if (use_kd) {
    Var str = cross_layer_loss(learner, k, traces, graphs, config.kernel);
    str_value = str.scalar();
    total = ad::add(total, ad::scale(str, config.alpha));
  }

  PhaseResult result;
  result.ce = ce_value;
  result.str = str_value;
  result.loss = total.scalar();
  if (with_grads) {
    tape.backward(total);
    for (const Var& leaf : bound.leaves) result.grads.push_back(tape.grad(leaf));
  }
  hooks.end_phase(tape, with_grads && update_shared);
  return result;
}

StepLosses alternating_train_step(StudentEnsemble& ensemble, std::vector<optim::Adam>& optimizers,
                                  std::span<const Sample* const> batch, const KdConfig& config, PhaseHooks& hooks) {
  if (ensemble.size() < 1) throw PreconditionError("ensemble has no students");
  if (optimizers.size() != ensemble.size()) throw PreconditionError("one optimizer per student required");
  StepLosses losses;
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    PhaseResult r = student_phase(ensemble, k, batch, config, hooks, true, true);
    std::vector<Matrix*> params;
    ensemble.students[k].for_each([&](const std::string&, Matrix& m) { params.push_back(&m); });
    optimizers[k].step(params, r.grads);
    losses.loss.push_back(r.loss);
    losses.ce.push_back(r.ce);
    losses.str.push_back(r.str);
  }
  return losses;
}

}  // namespace vulgraph::okd
