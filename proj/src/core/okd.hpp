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

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/autodiff.hpp"
#include "core/ggnn.hpp"
#include "core/optim.hpp"
#include "core/sample.hpp"

namespace vulgraph::okd {

using ad::Matrix;
using ad::Var;
using ad::Vector;

enum class KernelKind { kEuclidean, kLinear, kPoly, kRbf };
const char* kernel_name(KernelKind kind) noexcept;
KernelKind parse_kernel(std::string_view name);

struct KernelSpec {
  KernelKind kind = KernelKind::kRbf;
  double poly_c = 1.0;
  int poly_degree = 2;
  double sigma = 1.0;

  void validate() const;
};

struct KdConfig {
  double alpha = 1.0;
  KernelSpec kernel;
  int students = 2;

  void validate() const;
};

// euclidean ||a-b||^2, linear a.b, poly (a.b + c)^d, rbf exp(-||a-b||^2 / (2 sigma)).
double kernel_similarity(const Vector& zi, const Vector& zj, const KernelSpec& spec);

struct LocalStructure {
  std::int64_t node_id = 0;
  std::vector<std::int64_t> neighbor_ids;
  Vector probs;
};

// probs_j = exp(D(z_i, z_j)) / sum_j' exp(D(z_i, z_j')). Absent for no neighbours.
std::optional<LocalStructure> local_structure(std::int64_t node_id, const Vector& zi,
                                              std::span<const std::int64_t> neighbor_ids,
                                              const Matrix& neighbor_states, const KernelSpec& spec);

// One structure per node row that has neighbours, in row order.
std::vector<LocalStructure> local_structures(const Matrix& states, const Neighborhoods& nb,
                                             std::span<const std::int64_t> node_ids, const KernelSpec& spec);

// KL(target || learner); zero-probability target terms contribute nothing.
double lsp_divergence(const LocalStructure& target, const LocalStructure& learner);

// Layer states of one student on one graph.
using Trace = std::vector<Matrix>;

// Structure-preserving loss of student k over a batch:
//   sum_i 1/(M-1) 1/N sum_{p != k} sum_j KL(l^p_{i+1,j} || l^k_{i,j}),
// with layer H aligned against layer 1 and N counting nodes that have
// neighbours across the batch. traces[student][graph].
double cross_layer_loss(std::size_t k, const std::vector<std::vector<Trace>>& traces,
                        std::span<const Neighborhoods* const> graphs, const KernelSpec& spec);

// Same loss with student k's layers on the tape; counterpart traces are constants.
Var cross_layer_loss(const std::vector<std::vector<Var>>& learner, std::size_t k,
                     const std::vector<std::vector<Trace>>& traces, std::span<const Neighborhoods* const> graphs,
                     const KernelSpec& spec);

// Counterpart layer aligned with layer `layer` (0-based) of a student with `layers` layers.
inline std::size_t aligned_layer(std::size_t layer, std::size_t layers) { return (layer + 1) % layers; }

double total_student_loss(double ce, double str, double alpha);

// argmax of validation F1, lowest index on ties.
std::size_t select_inference_student(std::span<const double> validation_f1);

struct StudentEnsemble {
  ggnn::Architecture arch;
  std::vector<ggnn::StudentParams> students;

  std::size_t size() const { return students.size(); }
};

// Extension points used by joint training: trainable node features, a
// weighted graph-branch loss, extra loss terms and shared parameters.
class PhaseHooks {
 public:
  virtual ~PhaseHooks() = default;

  virtual void begin_phase(ad::Tape& tape) { (void)tape; }
  virtual Matrix feature_values(const Sample& sample) { return sample.features.x(); }
  virtual Var features(ad::Tape& tape, const Sample& sample) { return tape.constant(feature_values(sample)); }
  virtual double graph_weight() const { return 1.0; }
  virtual std::optional<Var> extra_loss(ad::Tape& tape, std::span<const Sample* const> batch) {
    (void)tape;
    (void)batch;
    return std::nullopt;
  }
  // After backward; `update` is false for pure evaluation.
  virtual void end_phase(ad::Tape& tape, bool update) {
    (void)tape;
    (void)update;
  }
};

// Forward pass of one student without gradients.
struct StudentOutput {
  Trace trace;
  Vector probabilities;
};
StudentOutput run_student(const ggnn::StudentParams& params, const ggnn::Architecture& arch, const Sample& sample,
                          const Matrix& x);

struct PhaseResult {
  double loss = 0.0;
  double ce = 0.0;   // weighted graph cross-entropy plus extra terms
  double str = 0.0;  // structure-preserving loss before alpha
  std::vector<Matrix> grads;  // StudentParams::for_each order
};

// Loss of student k on `batch`, with gradients when `with_grads` is set.
// Counterpart traces are recomputed from the current parameters.
PhaseResult student_phase(const StudentEnsemble& ensemble, std::size_t k, std::span<const Sample* const> batch,
                          const KdConfig& config, PhaseHooks& hooks, bool with_grads, bool update_shared = false);

struct StepLosses {
  std::vector<double> loss;
  std::vector<double> ce;
  std::vector<double> str;
};

// Updates students in index order; while student k moves, every other
// student's parameters stay untouched and enter only as constants.
StepLosses alternating_train_step(StudentEnsemble& ensemble, std::vector<optim::Adam>& optimizers,
                                  std::span<const Sample* const> batch, const KdConfig& config, PhaseHooks& hooks);

}  // namespace vulgraph::okd
