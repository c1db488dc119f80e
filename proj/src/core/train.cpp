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

#include "core/train.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>
#include <random>

#include "core/log.hpp"

namespace vulgraph::train {

using nlohmann::json;

// ---------------------------------------------------------------- config

void TrainConfig::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("lr must be > 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (max_epochs < 0) throw ConfigError("max_epochs must be >= 0");
  if (patience < 1) throw ConfigError("patience must be >= 1");
  if (max_nodes < 1) throw ConfigError("max_nodes must be >= 1");
  if (finetune_epochs < 0 || explicit_epochs < 0) throw ConfigError("epoch counts must be >= 0");
  if (state_dim < 0) throw ConfigError("state_dim must be >= 0 (0 selects the default)");
  if (content_dim_invalid()) throw ConfigError("content_dim must be >= 1");
  for (const auto& [name, w] : {std::pair{"hooks.triplet_weight", triplet_weight}, std::pair{"hooks.reg_weight", reg_weight}})
    if (w && (!(*w >= 0.0) || !std::isfinite(*w))) throw ConfigError(std::string(name) + " must be >= 0");
  kd.validate();
}

namespace {

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
  for (const auto& [key, value] : j.items()) {
    const std::string full = prefix.empty() ? key : prefix + "." + key;
    if (value.is_object())
      flatten(value, full, out);
    else
      out[full] = value;
  }
}

class Reader {
 public:
  explicit Reader(const json& j) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    flatten(j, "", values_);
  }

  template <typename T>
  void read(const std::string& key, T& into) {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    try {
      if constexpr (std::is_same_v<T, std::uint64_t> || std::is_same_v<T, std::size_t>) {
        if (!it->second.is_number_integer() || it->second.get<std::int64_t>() < 0)
          throw ConfigError("config key '" + key + "' must be a non-negative integer");
      } else if constexpr (std::is_integral_v<T>) {
        if (!it->second.is_number_integer()) throw ConfigError("config key '" + key + "' must be an integer");
      } else if constexpr (std::is_floating_point_v<T>) {
        if (!it->second.is_number()) throw ConfigError("config key '" + key + "' must be a number");
      } else {
        if (!it->second.is_string()) throw ConfigError("config key '" + key + "' must be a string");
      }
      into = it->second.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config key '" + key + "': " + e.what());
    }
    values_.erase(it);
  }

  void read_optional(const std::string& key, std::optional<double>& into) {
    auto it = values_.find(key);
    if (it == values_.end()) return;
    if (it->second.is_null()) {
      into.reset();
    } else if (it->second.is_number()) {
      into = it->second.get<double>();
    } else {
      throw ConfigError("config key '" + key + "' must be a number or null");
    }
    values_.erase(it);
  }

  void finish() const {
    if (!values_.empty()) throw ConfigError("unknown config key '" + values_.begin()->first + "'");
  }

 private:
  std::map<std::string, json> values_;
};

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

bool TrainConfig::content_dim_invalid() const { return provider.content_dim < 1; }

json TrainConfig::to_json() const {
  json j;
  j["lambda"] = lambda;
  j["lr"] = learning_rate;
  j["batch_size"] = batch_size;
  j["max_epochs"] = max_epochs;
  j["patience"] = patience;
  j["seed"] = seed;
  j["max_nodes"] = max_nodes;
  j["finetune_epochs"] = finetune_epochs;
  j["explicit_epochs"] = explicit_epochs;
  j["provider"] = provider.provider;
  j["content_dim"] = provider.content_dim;
  j["pooling"] = provider.pooling;
  j["state_dim"] = state_dim;
  j["ggnn"] = {{"steps", steps}, {"propagation", propagation}};
  j["readout"] = {{"layers", readout_layers}, {"conv_width", conv_width}, {"pool_window", pool_window}};
  j["kd"] = {{"alpha", kd.alpha},
             {"kernel", okd::kernel_name(kd.kernel.kind)},
             {"sigma", kd.kernel.sigma},
             {"poly_c", kd.kernel.poly_c},
             {"poly_degree", kd.kernel.poly_degree},
             {"students", kd.students}};
  j["hooks"] = {{"triplet_weight", optional_json(triplet_weight)},
                {"reg_weight", optional_json(reg_weight)},
                {"margin", optional_json(margin)}};
  return j;
}

TrainConfig TrainConfig::from_json(const json& j) {
  TrainConfig c;
  Reader r(j);
  r.read("lambda", c.lambda);
  r.read("lr", c.learning_rate);
  r.read("batch_size", c.batch_size);
  r.read("max_epochs", c.max_epochs);
  r.read("patience", c.patience);
  r.read("seed", c.seed);
  r.read("max_nodes", c.max_nodes);
  r.read("finetune_epochs", c.finetune_epochs);
  r.read("explicit_epochs", c.explicit_epochs);
  r.read("provider", c.provider.provider);
  r.read("content_dim", c.provider.content_dim);
  r.read("pooling", c.provider.pooling);
  r.read("state_dim", c.state_dim);
  r.read("ggnn.steps", c.steps);
  r.read("ggnn.propagation", c.propagation);
  r.read("readout.layers", c.readout_layers);
  r.read("readout.conv_width", c.conv_width);
  r.read("readout.pool_window", c.pool_window);
  r.read("kd.alpha", c.kd.alpha);
  std::string kernel = okd::kernel_name(c.kd.kernel.kind);
  r.read("kd.kernel", kernel);
  c.kd.kernel.kind = okd::parse_kernel(kernel);
  r.read("kd.sigma", c.kd.kernel.sigma);
  r.read("kd.poly_c", c.kd.kernel.poly_c);
  r.read("kd.poly_degree", c.kd.kernel.poly_degree);
  r.read("kd.students", c.kd.students);
  r.read_optional("hooks.triplet_weight", c.triplet_weight);
  r.read_optional("hooks.reg_weight", c.reg_weight);
  r.read_optional("hooks.margin", c.margin);
  r.finish();
  c.validate();
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  json j = json::parse(io::read_file(path), nullptr, false);
  if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  return TrainConfig::from_json(j);
}

namespace {

struct HookRegistry {
  std::mutex mutex;
  std::map<std::string, LossHook> hooks;
};

HookRegistry& hook_registry() {
  static HookRegistry r;
  return r;
}

std::optional<LossHook> find_loss_hook(const std::string& name) {
  std::lock_guard<std::mutex> lock(hook_registry().mutex);
  auto it = hook_registry().hooks.find(name);
  if (it == hook_registry().hooks.end()) return std::nullopt;
  return it->second;
}

}  // namespace

void register_loss_hook(const std::string& name, LossHook hook) {
  if (name != "triplet" && name != "regularization")
    throw ConfigError("loss hooks are 'triplet' or 'regularization', not '" + name + "'");
  std::lock_guard<std::mutex> lock(hook_registry().mutex);
  hook_registry().hooks[name] = std::move(hook);
}

void clear_loss_hooks() {
  std::lock_guard<std::mutex> lock(hook_registry().mutex);
  hook_registry().hooks.clear();
}

// ---------------------------------------------------------------- model

Model::Model(const Model& other)
    : config(other.config),
      vocab(other.vocab),
      provider(other.provider ? other.provider->clone() : nullptr),
      ensemble(other.ensemble),
      aux_w(other.aux_w),
      selected_student(other.selected_student) {}

Model& Model::operator=(const Model& other) {
  if (this != &other) {
    Model copy(other);
    *this = std::move(copy);
  }
  return *this;
}

io::Archive to_archive(const Model& model) {
  io::Archive a;
  const auto& arch = model.ensemble.arch;
  a.meta["format"] = kCheckpointFormat;
  a.meta["version"] = kCheckpointVersion;
  a.meta["config"] = model.config.to_json();
  a.meta["vocab"] = model.vocab.types();
  a.meta["arch"] = {{"feature_dim", arch.feature_dim},       {"state_dim", arch.state_dim},
                    {"steps", arch.steps},                   {"readout_layers", arch.readout_layers},
                    {"conv_width", arch.conv_width},         {"pool_window", arch.pool_window},
                    {"classes", arch.classes},               {"propagation", arch.propagation}};
  a.meta["students"] = model.ensemble.size();
  a.meta["selected_student"] = model.selected_student;
  const auto provider = features::save_provider(*model.provider);
  a.meta["provider"] = provider.meta;
  if (provider.table.size() > 0) a.tensors["provider.table"] = provider.table;
  a.tensors["aux.W"] = model.aux_w;
  for (std::size_t k = 0; k < model.ensemble.size(); ++k)
    model.ensemble.students[k].for_each([&](const std::string& name, const Matrix& m) {
      a.tensors["student." + std::to_string(k) + "." + name] = m;
    });
  return a;
}

Model from_archive(const io::Archive& a) {
  try {
    if (a.meta.value("format", "") != kCheckpointFormat) throw ParseError("not a vulgraph checkpoint");
    if (a.meta.value("version", 0) != kCheckpointVersion)
      throw ParseError("unsupported checkpoint version " + a.meta.value("version", json()).dump());
    Model m;
    m.config = TrainConfig::from_json(a.meta.at("config"));
    m.vocab = features::TypeVocabulary(a.meta.at("vocab").get<std::vector<std::string>>());
    features::ProviderState ps;
    ps.meta = a.meta.at("provider");
    if (auto it = a.tensors.find("provider.table"); it != a.tensors.end()) ps.table = it->second;
    m.provider = features::restore_provider(ps);

    const json& aj = a.meta.at("arch");
    auto& arch = m.ensemble.arch;
    arch.feature_dim = aj.at("feature_dim").get<int>();
    arch.state_dim = aj.at("state_dim").get<int>();
    arch.steps = aj.at("steps").get<int>();
    arch.readout_layers = aj.at("readout_layers").get<int>();
    arch.conv_width = aj.at("conv_width").get<int>();
    arch.pool_window = aj.at("pool_window").get<int>();
    arch.classes = aj.at("classes").get<int>();
    arch.propagation = aj.at("propagation").get<std::string>();
    arch.validate();
    const int expected_features = static_cast<int>(m.vocab.width()) + m.provider->content_dim();
    if (arch.feature_dim != expected_features)
      throw DimensionError("checkpoint feature dim " + std::to_string(arch.feature_dim) + " but vocabulary + provider give " +
                           std::to_string(expected_features));

    const auto students = a.meta.at("students").get<std::size_t>();
    for (std::size_t k = 0; k < students; ++k) {
      ggnn::StudentParams p = ggnn::init_student_normal(arch, 0, 0.0);
      p.for_each([&](const std::string& name, Matrix& t) {
        const Matrix& stored = a.tensor("student." + std::to_string(k) + "." + name);
        if (stored.rows() != t.rows() || stored.cols() != t.cols())
          throw DimensionError("tensor 'student." + std::to_string(k) + "." + name + "' is " +
                               std::to_string(stored.rows()) + "x" + std::to_string(stored.cols()) + ", expected " +
                               std::to_string(t.rows()) + "x" + std::to_string(t.cols()));
        t = stored;
      });
      m.ensemble.students.push_back(std::move(p));
    }
    m.aux_w = a.tensor("aux.W");
    if (m.aux_w.rows() != arch.classes || m.aux_w.cols() != m.provider->sequence_dim())
      throw DimensionError("aux.W is " + std::to_string(m.aux_w.rows()) + "x" + std::to_string(m.aux_w.cols()) +
                           ", expected " + std::to_string(arch.classes) + "x" +
                           std::to_string(m.provider->sequence_dim()));
    m.selected_student = a.meta.at("selected_student").get<std::size_t>();
    if (students == 0 || m.selected_student >= students) throw ParseError("checkpoint selected_student out of range");
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("corrupt checkpoint metadata: ") + e.what());
  }
}

void save_checkpoint(const Model& model, const std::filesystem::path& path) { io::save_archive(path, to_archive(model)); }

Model load_checkpoint(const std::filesystem::path& path) { return from_archive(io::load_archive(path)); }

// ---------------------------------------------------------------- prediction

double implicit_loss(const Vector& probabilities, int label) {
  if (label < 0 || label >= probabilities.size()) throw PreconditionError("label outside the class range");
  return -std::log(std::max(probabilities(label), 1e-12));
}

Vector auxiliary_seq_logits(const Vector& sequence_embedding, const Matrix& w) {
  if (w.cols() != sequence_embedding.size())
    throw DimensionError("auxiliary head expects " + std::to_string(w.cols()) + " inputs, got " +
                         std::to_string(sequence_embedding.size()));
  return ggnn::softmax(w * sequence_embedding);
}

Vector interpolate_predictions(const Vector& p_graph, const Vector& p_seq, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (p_graph.size() != p_seq.size()) throw DimensionError("branch distributions differ in size");
  if (lambda == 1.0) return p_graph;
  if (lambda == 0.0) return p_seq;
  return lambda * p_graph + (1.0 - lambda) * p_seq;
}

int decide(const Vector& p_final) { return p_final(1) >= p_final(0) ? 1 : 0; }

namespace {

const features::TableProvider* table_of(const Model& model) {
  return dynamic_cast<const features::TableProvider*>(model.provider.get());
}

Matrix pooled(const Matrix& table, const std::vector<std::vector<int>>& bags) {
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(bags.size()), table.cols());
  for (std::size_t r = 0; r < bags.size(); ++r) {
    if (bags[r].empty()) continue;
    for (int i : bags[r]) out.row(static_cast<Eigen::Index>(r)) += table.row(i);
    out.row(static_cast<Eigen::Index>(r)) /= static_cast<double>(bags[r].size());
  }
  return out;
}

// Features and sequence embedding under the model's current provider state.
Matrix features_of(const Model& model, const Sample& s) {
  const auto* table = table_of(model);
  if (!table || static_cast<Eigen::Index>(s.features.content_rows.size()) != s.features.rows())
    return s.features.x();
  Matrix x(s.features.rows(), s.features.feature_dim());
  x << s.features.type_onehot, pooled(table->table(), s.features.content_rows);
  return x;
}

Vector sequence_of(const Model& model, const Sample& s) {
  const auto* table = table_of(model);
  if (!table) return s.features.sequence;
  return pooled(table->table(), {s.features.sequence_rows}).row(0).transpose();
}

}  // namespace

PredictionPair branch_outputs(const Model& model, const Sample& sample, std::optional<std::size_t> student) {
  const std::size_t k = student.value_or(model.selected_student);
  if (k >= model.ensemble.size()) throw PreconditionError("student index out of range");
  if (sample.features.feature_dim() != model.ensemble.arch.feature_dim)
    throw DimensionError("sample feature dim " + std::to_string(sample.features.feature_dim()) +
                         " does not match model feature dim " + std::to_string(model.ensemble.arch.feature_dim));
  PredictionPair out;
  out.p_graph = okd::run_student(model.ensemble.students[k], model.ensemble.arch, sample, features_of(model, sample))
                    .probabilities;
  out.p_seq = auxiliary_seq_logits(sequence_of(model, sample), model.aux_w);
  out.p_final = interpolate_predictions(out.p_graph, out.p_seq, model.config.lambda);
  return out;
}

Sample prepare(const Model& model, const cpg::CodePropertyGraph& graph, cpg::Split split) {
  return make_sample(graph, split, model.vocab, *model.provider);
}

Prediction predict(const Model& model, const cpg::CodePropertyGraph& graph) {
  if (graph.node_count() > model.config.max_nodes)
    throw RejectedInput("function '" + graph.function_id + "' has " + std::to_string(graph.node_count()) +
                        " nodes, above max_nodes " + std::to_string(model.config.max_nodes));
  const Sample s = prepare(model, cpg::prune_nonleaf_properties(graph));
  Prediction p;
  p.student = model.selected_student;
  p.pair = branch_outputs(model, s);
  p.decision = decide(p.pair.p_final);
  return p;
}

metrics::MetricsReport evaluate(const Model& model, std::span<const Sample> samples, std::optional<double> lambda) {
  std::vector<int> preds, labels;
  for (const Sample& s : samples) {
    PredictionPair pair = branch_outputs(model, s);
    if (lambda) pair.p_final = interpolate_predictions(pair.p_graph, pair.p_seq, *lambda);
    preds.push_back(decide(pair.p_final));
    labels.push_back(s.label);
  }
  return metrics::compute_metrics(preds, labels);
}

// ---------------------------------------------------------------- training

nlohmann::json EpochLog::to_json() const {
  json j;
  j["epoch"] = epoch;
  j["stage"] = stage;
  j["loss"] = loss;
  j["ce"] = ce;
  j["str"] = str;
  j["valid"] = valid.to_json();
  j["selected_student"] = selected_student;
  return j;
}

std::uint64_t student_seed(std::uint64_t seed, std::size_t k) {
  // splitmix64 step
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(k) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Model initialize_model(const TrainConfig& config, std::span<const cpg::CodePropertyGraph* const> train_graphs) {
  config.validate();
  Model m;
  m.config = config;
  m.vocab = features::TypeVocabulary::fit(train_graphs);
  features::ProviderSpec spec = config.provider;
  spec.seed = config.seed;
  m.provider = features::make_provider(spec);
  auto& arch = m.ensemble.arch;
  arch.feature_dim = static_cast<int>(m.vocab.width()) + m.provider->content_dim();
  arch.state_dim = config.state_dim > 0 ? config.state_dim : arch.feature_dim + 16;
  arch.steps = config.steps;
  arch.readout_layers = config.readout_layers;
  arch.conv_width = config.conv_width;
  arch.pool_window = config.pool_window;
  arch.propagation = config.propagation;
  arch.validate();
  ggnn::find_propagation(arch.propagation);
  for (int k = 0; k < config.kd.students; ++k)
    m.ensemble.students.push_back(ggnn::init_student(arch, student_seed(config.seed, static_cast<std::size_t>(k))));
  m.aux_w = Matrix::Zero(arch.classes, m.provider->sequence_dim());
  return m;
}

namespace {

// Joint-training additions to each student phase: node content through a
// trainable provider table, the lambda-weighted auxiliary sequence loss and
// the optional triplet/regularization hooks.
class JointHooks final : public okd::PhaseHooks {
 public:
  JointHooks(Model& model, optim::Adam& shared) : model_(model), shared_(shared) {
    table_ = dynamic_cast<features::TableProvider*>(model.provider.get());
    if (model.config.triplet_weight.value_or(0.0) > 0.0) triplet_ = find_loss_hook("triplet");
    if (model.config.reg_weight.value_or(0.0) > 0.0) reg_ = find_loss_hook("regularization");
  }

  void begin_phase(ad::Tape& tape) override {
    table_var_ = table_ ? tape.parameter(table_->table()) : ad::Var();
    w_var_ = seq_weight() > 0.0 ? tape.parameter(model_.aux_w) : ad::Var();
  }

  Matrix feature_values(const Sample& s) override { return features_of(model_, s); }

  ad::Var features(ad::Tape& tape, const Sample& s) override {
    if (!table_var_.valid()) return tape.constant(s.features.x());
    return ad::hconcat(tape.constant(s.features.type_onehot), ad::gather_mean_rows(table_var_, s.features.content_rows));
  }

  double graph_weight() const override { return model_.config.lambda; }

  std::optional<ad::Var> extra_loss(ad::Tape& tape, std::span<const Sample* const> batch) override {
    std::optional<ad::Var> total;
    auto add = [&](ad::Var v) { total = total ? ad::add(*total, v) : v; };
    if (w_var_.valid()) {
      ad::Var sum;
      for (const Sample* s : batch) {
        ad::Var e = table_var_.valid() ? ad::gather_mean_rows(table_var_, {s->features.sequence_rows})
                                       : tape.constant(s->features.sequence.transpose());
        ad::Var logp = ad::log_softmax_rows(ad::matmul_nt(e, w_var_));
        Matrix target = Matrix::Zero(1, logp.cols());
        target(0, s->label) = -1.0;
        ad::Var ce = ad::weighted_sum(logp, target);
        sum = sum.valid() ? ad::add(sum, ce) : ce;
      }
      add(ad::scale(sum, seq_weight() / static_cast<double>(batch.size())));
    }
    if (triplet_) add(ad::scale((*triplet_)(tape, batch, model_.config), *model_.config.triplet_weight));
    if (reg_) add(ad::scale((*reg_)(tape, batch, model_.config), *model_.config.reg_weight));
    return total;
  }

  void end_phase(ad::Tape& tape, bool update) override {
    if (!update) return;
    std::vector<Matrix*> params;
    std::vector<Matrix> grads;
    if (table_var_.valid()) {
      params.push_back(&table_->table());
      grads.push_back(tape.grad(table_var_));
    }
    if (w_var_.valid()) {
      params.push_back(&model_.aux_w);
      grads.push_back(tape.grad(w_var_));
    }
    if (!params.empty()) shared_.step(params, grads);
  }

 private:
  double seq_weight() const { return 1.0 - model_.config.lambda; }

  Model& model_;
  optim::Adam& shared_;
  features::TableProvider* table_ = nullptr;
  ad::Var table_var_, w_var_;
  std::optional<LossHook> triplet_, reg_;
};

struct ValidPass {
  std::vector<std::vector<Vector>> p_graph;  // [student][sample]
  std::vector<Vector> p_seq;
};

ValidPass run_valid(const Model& model, std::span<const Sample> samples) {
  ValidPass v;
  v.p_graph.resize(model.ensemble.size());
  for (const Sample& s : samples) {
    const Matrix x = features_of(model, s);
    for (std::size_t k = 0; k < model.ensemble.size(); ++k)
      v.p_graph[k].push_back(okd::run_student(model.ensemble.students[k], model.ensemble.arch, s, x).probabilities);
    v.p_seq.push_back(auxiliary_seq_logits(sequence_of(model, s), model.aux_w));
  }
  return v;
}

// Picks the inference student on validation F1 and scores the interpolated prediction.
metrics::MetricsReport score(Model& model, const ValidPass& v, std::span<const Sample> samples) {
  std::vector<int> labels;
  for (const Sample& s : samples) labels.push_back(s.label);
  std::vector<double> f1s;
  for (const auto& probs : v.p_graph) {
    std::vector<int> preds;
    for (const auto& p : probs) preds.push_back(decide(p));
    f1s.push_back(metrics::compute_metrics(preds, labels).f1);
  }
  model.selected_student = okd::select_inference_student(f1s);
  std::vector<int> preds;
  for (std::size_t i = 0; i < samples.size(); ++i)
    preds.push_back(decide(interpolate_predictions(v.p_graph[model.selected_student][i], v.p_seq[i], model.config.lambda)));
  return metrics::compute_metrics(preds, labels);
}

bool all_finite(const Model& m) {
  bool ok = m.aux_w.allFinite();
  for (const auto& s : m.ensemble.students)
    s.for_each([&](const std::string&, const Matrix& t) { ok = ok && t.allFinite(); });
  if (const auto* t = table_of(m)) ok = ok && t->table().allFinite();
  return ok;
}

std::vector<std::vector<std::size_t>> batches(std::vector<std::size_t>& order, std::mt19937_64& rng, int batch_size) {
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(batch_size))
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                     order.begin() + static_cast<std::ptrdiff_t>(std::min(order.size(), i + static_cast<std::size_t>(batch_size))));
  return out;
}

}  // namespace

TrainResult train_model(Model model, std::span<const Sample> train_set, std::span<const Sample> valid_set,
                        const EpochCallback& on_epoch) {
  const TrainConfig& cfg = model.config;
  cfg.validate();
  if (train_set.empty()) throw DataError("train split is empty");
  if (valid_set.empty()) throw DataError("valid split is empty");
  if (cfg.triplet_weight.value_or(0.0) > 0.0 && !find_loss_hook("triplet"))
    throw ConfigError("hooks.triplet_weight is set but no triplet loss hook is registered");
  if (cfg.reg_weight.value_or(0.0) > 0.0 && !find_loss_hook("regularization"))
    throw ConfigError("hooks.reg_weight is set but no regularization loss hook is registered");

  const std::size_t students = model.ensemble.size();
  std::vector<optim::Adam> optimizers(students, optim::Adam(cfg.learning_rate));
  optim::Adam shared(cfg.learning_rate);
  JointHooks hooks(model, shared);
  std::mt19937_64 rng(cfg.seed ^ 0x7368756666ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  auto best = std::make_shared<Model>(model);
  double best_f1 = score(*best, run_valid(*best, valid_set), valid_set).f1;
  int since_best = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    EpochLog entry;
    entry.epoch = epoch;
    entry.stage = "implicit";
    entry.loss.assign(students, 0.0);
    entry.ce.assign(students, 0.0);
    entry.str.assign(students, 0.0);
    std::size_t seen = 0;
    for (const auto& idx : batches(order, rng, cfg.batch_size)) {
      std::vector<const Sample*> batch;
      for (std::size_t i : idx) batch.push_back(&train_set[i]);
      const okd::StepLosses losses = okd::alternating_train_step(model.ensemble, optimizers, batch, cfg.kd, hooks);
      for (std::size_t k = 0; k < students; ++k) {
        if (!std::isfinite(losses.loss[k]))
          throw DivergenceError("student " + std::to_string(k) + " loss became non-finite in epoch " +
                                    std::to_string(epoch),
                                best);
        const double w = static_cast<double>(batch.size());
        entry.loss[k] += losses.loss[k] * w;
        entry.ce[k] += losses.ce[k] * w;
        entry.str[k] += losses.str[k] * w;
      }
      seen += batch.size();
      if (!all_finite(model)) throw DivergenceError("parameters became non-finite in epoch " + std::to_string(epoch), best);
    }
    for (std::size_t k = 0; k < students; ++k) {
      entry.loss[k] /= static_cast<double>(seen);
      entry.ce[k] /= static_cast<double>(seen);
      entry.str[k] /= static_cast<double>(seen);
    }
    entry.valid = score(model, run_valid(model, valid_set), valid_set);
    entry.selected_student = model.selected_student;
    if (entry.valid.f1 > best_f1) {
      best_f1 = entry.valid.f1;
      best = std::make_shared<Model>(model);
      since_best = 0;
    } else {
      ++since_best;
    }
    result.log.push_back(entry);
    if (on_epoch) on_epoch(entry);
    if (since_best >= cfg.patience) break;
  }

  Model final_model = *best;

  // Auxiliary head on frozen sequence embeddings.
  if (cfg.explicit_epochs > 0) {
    std::vector<Vector> seq;
    for (const Sample& s : train_set) seq.push_back(sequence_of(final_model, s));
    const ValidPass base = run_valid(final_model, valid_set);
    optim::Adam head_opt(cfg.learning_rate);
    Matrix w = final_model.aux_w;
    for (int epoch = 1; epoch <= cfg.explicit_epochs; ++epoch) {
      double loss_sum = 0.0;
      for (const auto& idx : batches(order, rng, cfg.batch_size)) {
        Matrix grad = Matrix::Zero(w.rows(), w.cols());
        for (std::size_t i : idx) {
          Vector p = auxiliary_seq_logits(seq[i], w);
          loss_sum += implicit_loss(p, train_set[i].label);
          p(train_set[i].label) -= 1.0;
          grad += p * seq[i].transpose();
        }
        grad /= static_cast<double>(idx.size());
        std::vector<Matrix*> params{&w};
        std::vector<Matrix> grads{grad};
        head_opt.step(params, grads);
      }
      Model candidate = final_model;
      candidate.aux_w = w;
      ValidPass v = base;
      v.p_seq.clear();
      for (const Sample& s : valid_set) v.p_seq.push_back(auxiliary_seq_logits(sequence_of(candidate, s), w));
      EpochLog entry;
      entry.epoch = epoch;
      entry.stage = "explicit";
      entry.loss = {loss_sum / static_cast<double>(train_set.size())};
      entry.valid = score(candidate, v, valid_set);
      entry.selected_student = candidate.selected_student;
      result.log.push_back(entry);
      if (on_epoch) on_epoch(entry);
      if (entry.valid.f1 >= best_f1) {
        best_f1 = entry.valid.f1;
        final_model = std::move(candidate);
      }
    }
  }

  result.model = std::move(final_model);
  result.best_valid_f1 = best_f1;
  return result;
}

TrainResult train(const TrainConfig& config, std::span<const cpg::CorpusRecord> corpus, const EpochCallback& on_epoch) {
  config.validate();
  std::vector<const cpg::CorpusRecord*> train_recs, valid_recs;
  std::size_t oversized = 0;
  for (const auto& r : corpus) {
    if (r.graph.node_count() > config.max_nodes) {
      ++oversized;
      continue;
    }
    if (r.split == cpg::Split::kTrain) train_recs.push_back(&r);
    if (r.split == cpg::Split::kValid) valid_recs.push_back(&r);
  }
  if (oversized) log::warn(std::to_string(oversized) + " record(s) above max_nodes were skipped");
  if (train_recs.empty()) throw DataError("train split is empty");
  if (valid_recs.empty()) throw DataError("valid split is empty");

  std::vector<const cpg::CodePropertyGraph*> train_graphs;
  for (const auto* r : train_recs) train_graphs.push_back(&r->graph);
  Model model = initialize_model(config, train_graphs);

  std::vector<Sample> train_set, valid_set;
  for (const auto* r : train_recs) train_set.push_back(prepare(model, r->graph, r->split));
  for (const auto* r : valid_recs) valid_set.push_back(prepare(model, r->graph, r->split));

  if (config.finetune_epochs > 0) {
    std::vector<const Sample*> ptrs;
    for (const auto& s : train_set) ptrs.push_back(&s);
    finetune_provider(*model.provider, ptrs, config.finetune_epochs, config.learning_rate, config.batch_size,
                      model.aux_w);
  }
  return train_model(std::move(model), train_set, valid_set, on_epoch);
}

std::vector<double> finetune_provider(features::EmbeddingProvider& provider, std::span<const Sample* const> train_set,
                                      int epochs, double learning_rate, int batch_size, Matrix& head) {
  auto* table = dynamic_cast<features::TableProvider*>(&provider);
  if (!table) {
    log::warn("provider '" + provider.name() + "' is not trainable; fine-tuning skipped");
    return {};
  }
  if (epochs <= 0 || train_set.empty()) return {};
  if (head.cols() != table->sequence_dim())
    throw DimensionError("fine-tuning head expects " + std::to_string(head.cols()) + " inputs, provider gives " +
                         std::to_string(table->sequence_dim()));
  optim::Adam opt(learning_rate);
  std::vector<double> losses;
  for (int e = 0; e < epochs; ++e) {
    double total = 0.0;
    for (std::size_t start = 0; start < train_set.size(); start += static_cast<std::size_t>(batch_size)) {
      const std::size_t end = std::min(train_set.size(), start + static_cast<std::size_t>(batch_size));
      ad::Tape tape;
      ad::Var t = tape.parameter(table->table());
      ad::Var w = tape.parameter(head);
      ad::Var sum;
      for (std::size_t i = start; i < end; ++i) {
        const Sample& s = *train_set[i];
        ad::Var logp = ad::log_softmax_rows(ad::matmul_nt(ad::gather_mean_rows(t, {s.features.sequence_rows}), w));
        Matrix target = Matrix::Zero(1, logp.cols());
        target(0, s.label) = -1.0;
        ad::Var ce = ad::weighted_sum(logp, target);
        sum = sum.valid() ? ad::add(sum, ce) : ce;
      }
      ad::Var loss = ad::scale(sum, 1.0 / static_cast<double>(end - start));
      tape.backward(loss);
      total += loss.scalar() * static_cast<double>(end - start);
      std::vector<Matrix*> params{&table->table(), &head};
      std::vector<Matrix> grads{tape.grad(t), tape.grad(w)};
      opt.step(params, grads);
    }
    losses.push_back(total / static_cast<double>(train_set.size()));
  }
  return losses;
}

}  // namespace vulgraph::train
