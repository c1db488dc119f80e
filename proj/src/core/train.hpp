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

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/cpg.hpp"
#include "core/errors.hpp"
#include "core/featurize.hpp"
#include "core/ggnn.hpp"
#include "core/metrics.hpp"
#include "core/okd.hpp"
#include "core/sample.hpp"
#include "core/tensor_io.hpp"
#include "json.hpp"

namespace vulgraph::train {

using ad::Matrix;
using ad::Vector;

struct TrainConfig {
  double lambda = 0.8;
  double learning_rate = 1e-4;
  int batch_size = 64;
  int max_epochs = 20;
  int patience = 5;
  std::uint64_t seed = 0;
  std::size_t max_nodes = 500;
  // Sequence-classification fine-tuning of the provider before graph training.
  int finetune_epochs = 0;
  // Auxiliary-head epochs after the graph stage, provider frozen.
  int explicit_epochs = 5;

  features::ProviderSpec provider;
  int state_dim = 0;  // 0: feature dim + 16
  int steps = 6;
  int readout_layers = 2;
  int conv_width = 3;
  int pool_window = 2;
  std::string propagation = "ggnn";

  okd::KdConfig kd;

  // Extension hooks; unset means disabled. A positive weight needs a hook
  // registered under "triplet" / "regularization".
  std::optional<double> triplet_weight;
  std::optional<double> reg_weight;
  std::optional<double> margin;

  void validate() const;
  bool content_dim_invalid() const;
  nlohmann::json to_json() const;
  // Accepts nested objects or dotted keys ("kd.alpha"); unknown keys are a ConfigError.
  static TrainConfig from_json(const nlohmann::json& j);
};

TrainConfig load_config(const std::filesystem::path& path);

// Extra loss terms for the triplet/regularization hooks.
using LossHook = std::function<ad::Var(ad::Tape&, std::span<const Sample* const>, const TrainConfig&)>;
void register_loss_hook(const std::string& name, LossHook hook);
void clear_loss_hooks();

struct Model {
  TrainConfig config;
  features::TypeVocabulary vocab;
  std::unique_ptr<features::EmbeddingProvider> provider;
  okd::StudentEnsemble ensemble;
  Matrix aux_w;  // classes x sequence_dim
  std::size_t selected_student = 0;

  Model() = default;
  Model(const Model& other);
  Model& operator=(const Model& other);
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;
};

inline constexpr const char* kCheckpointFormat = "vulgraph-checkpoint";
inline constexpr int kCheckpointVersion = 1;

io::Archive to_archive(const Model& model);
// Validates every tensor against the recorded architecture (DimensionError).
Model from_archive(const io::Archive& archive);
void save_checkpoint(const Model& model, const std::filesystem::path& path);
Model load_checkpoint(const std::filesystem::path& path);

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::shared_ptr<const Model> last_good)
      : Error(ErrorKind::kDivergence, what), last_good_(std::move(last_good)) {}
  const std::shared_ptr<const Model>& last_good() const { return last_good_; }

 private:
  std::shared_ptr<const Model> last_good_;
};

// -sum_c y_c log p_c with p clamped at 1e-12.
double implicit_loss(const Vector& probabilities, int label);
// softmax(W E).
Vector auxiliary_seq_logits(const Vector& sequence_embedding, const Matrix& w);
// lambda p_graph + (1 - lambda) p_seq; lambda outside [0,1] is a ConfigError.
Vector interpolate_predictions(const Vector& p_graph, const Vector& p_seq, double lambda);
// argmax, ties to class 1.
int decide(const Vector& p_final);

struct PredictionPair {
  Vector p_graph;
  Vector p_seq;
  Vector p_final;
};

struct Prediction {
  PredictionPair pair;
  int decision = 0;
  std::size_t student = 0;
};

// Graph branch from `student` (default: the selected one), sequence branch from the auxiliary head.
PredictionPair branch_outputs(const Model& model, const Sample& sample, std::optional<std::size_t> student = {});
Sample prepare(const Model& model, const cpg::CodePropertyGraph& graph, cpg::Split split = cpg::Split::kTest);
// Rejects graphs above the model's max_nodes; prunes non-leaf fragments first.
Prediction predict(const Model& model, const cpg::CodePropertyGraph& graph);

struct EpochLog {
  int epoch = 0;
  std::string stage;  // "implicit" | "explicit"
  std::vector<double> loss, ce, str;
  metrics::MetricsReport valid;
  std::size_t selected_student = 0;

  nlohmann::json to_json() const;
};

struct TrainResult {
  Model model;
  std::vector<EpochLog> log;
  double best_valid_f1 = 0.0;
};

using EpochCallback = std::function<void(const EpochLog&)>;

// Splits the corpus, fits the vocabulary on train, builds the provider and
// the ensemble, then runs alternating distillation epochs with early
// stopping on validation F1, followed by the auxiliary-head stage.
TrainResult train(const TrainConfig& config, std::span<const cpg::CorpusRecord> corpus,
                  const EpochCallback& on_epoch = {});

// Lower-level entry: trains an existing model in place on prepared samples.
TrainResult train_model(Model model, std::span<const Sample> train_set, std::span<const Sample> valid_set,
                        const EpochCallback& on_epoch = {});

// Builds an untrained model (vocabulary from `train_graphs`, fresh provider and students).
Model initialize_model(const TrainConfig& config, std::span<const cpg::CodePropertyGraph* const> train_graphs);
std::uint64_t student_seed(std::uint64_t seed, std::size_t k);

// Sequence-classification fine-tuning of a trainable provider together with
// `head` (classes x sequence_dim). Returns the mean loss per epoch; a
// non-trainable provider is left alone with a warning.
std::vector<double> finetune_provider(features::EmbeddingProvider& provider, std::span<const Sample* const> train_set,
                                      int epochs, double learning_rate, int batch_size, Matrix& head);

// Validation-style evaluation of the interpolated prediction.
metrics::MetricsReport evaluate(const Model& model, std::span<const Sample> samples, std::optional<double> lambda = {});

}  // namespace vulgraph::train
