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

#include <filesystem>
#include <fstream>

#include "core/errors.hpp"
#include "core/log.hpp"
#include "core/synthetic.hpp"
#include "core/tensor_io.hpp"
#include "core/train.hpp"
#include "doctest.h"
#include "support/test_support.hpp"

using namespace vulgraph;
using namespace vulgraph::train;
using vgtest::Matrix;
using vgtest::Vector;
using nlohmann::json;

namespace {

Vector vec2(double a, double b) {
  Vector v(2);
  v << a, b;
  return v;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vulgraph_" + name + "_" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

TrainConfig quick_config() {
  TrainConfig c;
  c.provider.content_dim = 8;
  c.learning_rate = 1e-2;
  c.batch_size = 8;
  c.max_epochs = 3;
  c.explicit_epochs = 2;
  c.steps = 2;
  c.seed = 11;
  return c;
}

std::vector<cpg::CorpusRecord> corpus(std::size_t n = 24, std::uint64_t seed = 2) {
  synthetic::Options o;
  o.count = n;
  o.seed = seed;
  o.valid_fraction = 0.25;
  o.test_fraction = 0.0;
  return synthetic::make_corpus(o);
}

}  // namespace

TEST_CASE("config JSON round trip and validation") {
  TrainConfig c = quick_config();
  c.kd.kernel.kind = okd::KernelKind::kPoly;
  c.triplet_weight = 0.0;
  const auto back = TrainConfig::from_json(c.to_json());
  CHECK(back.to_json() == c.to_json());

  const auto dotted = TrainConfig::from_json(json{{"kd.alpha", 0.5}, {"ggnn.steps", 4}, {"lambda", 0.3}});
  CHECK(dotted.kd.alpha == 0.5);
  CHECK(dotted.steps == 4);
  CHECK(dotted.lambda == 0.3);
  CHECK_THROWS_AS(TrainConfig::from_json(json{{"kd", {{"alhpa", 1.0}}}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(json{{"lambda", 1.5}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(json{{"lambda", "high"}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(json{{"kd.kernel", "cosine"}}), ConfigError);
  CHECK_THROWS_AS(TrainConfig::from_json(json{{"batch_size", 0}}), ConfigError);

  const TrainConfig d;
  CHECK(d.lambda == 0.8);
  CHECK(d.learning_rate == 1e-4);
  CHECK(d.batch_size == 64);
  CHECK(d.max_epochs == 20);
  CHECK(d.patience == 5);
  CHECK(d.max_nodes == 500);

  const auto dir = temp_dir("config");
  std::ofstream(dir / "c.json") << R"({"lambda": 0.6, "kd": {"students": 3}})";
  const auto loaded = load_config(dir / "c.json");
  CHECK(loaded.lambda == 0.6);
  CHECK(loaded.kd.students == 3);
  std::ofstream(dir / "bad.json") << "lambda = 0.6";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("interpolation and decisions") {
  const Vector g = vec2(0.9, 0.1), s = vec2(0.5, 0.5);
  const Vector mix = interpolate_predictions(g, s, 0.8);
  CHECK(std::abs(mix(0) - 0.82) <= 1e-12);
  CHECK(std::abs(mix(1) - 0.18) <= 1e-12);
  const Vector at1 = interpolate_predictions(g, s, 1.0), at0 = interpolate_predictions(g, s, 0.0);
  CHECK(std::memcmp(at1.data(), g.data(), 2 * sizeof(double)) == 0);
  CHECK(std::memcmp(at0.data(), s.data(), 2 * sizeof(double)) == 0);
  CHECK_THROWS_AS(interpolate_predictions(g, s, 1.2), ConfigError);
  CHECK(decide(vec2(0.5, 0.5)) == 1);
  CHECK(decide(vec2(0.6, 0.4)) == 0);
  CHECK(implicit_loss(vec2(0.25, 0.75), 1) == doctest::Approx(-std::log(0.75)));
  CHECK(std::isfinite(implicit_loss(vec2(1.0, 0.0), 1)));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    const double a = u(rng), b = u(rng), lam = u(rng);
    const Vector m = interpolate_predictions(vec2(a, 1 - a), vec2(b, 1 - b), lam);
    CHECK(m.minCoeff() >= 0.0);
    CHECK(std::abs(m.sum() - 1.0) <= 1e-12);
  }
}

TEST_CASE("training run, early stopping and checkpoints") {
  const auto data = corpus();
  std::vector<EpochLog> seen;
  const auto result = train::train(quick_config(), data, [&](const EpochLog& e) { seen.push_back(e); });
  CHECK(seen.size() == result.log.size());
  double best_logged = -1.0;
  for (const auto& e : result.log) {
    CHECK(e.valid.f1 <= result.best_valid_f1);
    best_logged = std::max(best_logged, e.valid.f1);
    for (double l : e.loss) CHECK(std::isfinite(l));
  }
  CHECK(result.best_valid_f1 >= best_logged);

  std::vector<Sample> valid;
  for (const auto& r : data)
    if (r.split == cpg::Split::kValid) valid.push_back(prepare(result.model, r.graph, r.split));
  CHECK(evaluate(result.model, valid).f1 == result.best_valid_f1);

  const auto dir = temp_dir("ckpt");
  save_checkpoint(result.model, dir / "a.ckpt");
  const auto loaded = load_checkpoint(dir / "a.ckpt");
  save_checkpoint(loaded, dir / "b.ckpt");
  CHECK(io::read_file(dir / "a.ckpt") == io::read_file(dir / "b.ckpt"));
  CHECK(evaluate(loaded, valid).f1 == result.best_valid_f1);

  auto archive = io::load_archive(dir / "a.ckpt");
  archive.tensors["aux.W"] = Matrix::Zero(2, 3);
  io::save_archive(dir / "bad.ckpt", archive);
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), DimensionError);
  archive = io::load_archive(dir / "a.ckpt");
  archive.meta["arch"]["feature_dim"] = 99;
  io::save_archive(dir / "bad2.ckpt", archive);
  CHECK_THROWS_AS(load_checkpoint(dir / "bad2.ckpt"), DimensionError);
  archive = io::load_archive(dir / "a.ckpt");
  archive.tensors["student.0.gru.U"] = Matrix::Zero(1, 1);
  io::save_archive(dir / "bad3.ckpt", archive);
  CHECK_THROWS_AS(load_checkpoint(dir / "bad3.ckpt"), DimensionError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint round trip with a trainable provider") {
  auto cfg = quick_config();
  cfg.provider.provider = "lookup:64";
  cfg.lambda = 0.5;
  cfg.max_epochs = 1;
  const auto result = train::train(cfg, corpus(16));
  const auto dir = temp_dir("ckpt_lookup");
  save_checkpoint(result.model, dir / "a.ckpt");
  save_checkpoint(load_checkpoint(dir / "a.ckpt"), dir / "b.ckpt");
  CHECK(io::read_file(dir / "a.ckpt") == io::read_file(dir / "b.ckpt"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("disabled distillation reduces to a plain single-model classifier") {
  // Reference: full-batch GGNN cross-entropy training written directly against the graph module.
  auto data = corpus(12, 9);
  TrainConfig cfg = quick_config();
  cfg.lambda = 1.0;
  cfg.kd.alpha = 0.0;
  cfg.batch_size = 64;
  cfg.max_epochs = 4;
  cfg.patience = 10;
  cfg.explicit_epochs = 0;

  std::vector<const cpg::CodePropertyGraph*> train_graphs;
  for (const auto& r : data)
    if (r.split == cpg::Split::kTrain) train_graphs.push_back(&r.graph);
  const Model init = initialize_model(cfg, train_graphs);
  std::vector<Sample> samples;
  for (const auto& r : data)
    if (r.split == cpg::Split::kTrain) samples.push_back(prepare(init, r.graph, r.split));
  const auto& arch = init.ensemble.arch;
  auto params = ggnn::init_student(arch, student_seed(cfg.seed, 0));
  optim::Adam adam(cfg.learning_rate);
  std::vector<double> reference;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    ad::Tape tape;
    const auto bound = ggnn::bind(tape, params, true);
    ad::Var sum;
    for (const auto& s : samples) {
      ad::Var x = tape.constant(s.features.x());
      ad::Var h1 = ad::hconcat(x, tape.constant(Matrix::Zero(x.rows(), arch.state_dim - arch.feature_dim)));
      const auto states = ggnn::propagate(bound, s.topology, h1, arch.steps);
      ad::Var logp = ad::log_softmax_rows(ggnn::readout(bound, arch, states.back(), x));
      Matrix w = Matrix::Zero(1, 2);
      w(0, s.label) = -1.0;
      ad::Var ce = ad::weighted_sum(logp, w);
      sum = sum.valid() ? ad::add(sum, ce) : ce;
    }
    ad::Var loss = ad::scale(sum, 1.0 / static_cast<double>(samples.size()));
    tape.backward(loss);
    reference.push_back(loss.scalar());
    std::vector<Matrix*> ptrs;
    std::vector<Matrix> grads;
    params.for_each([&](const std::string&, Matrix& m) { ptrs.push_back(&m); });
    for (const auto& leaf : bound.leaves) grads.push_back(tape.grad(leaf));
    adam.step(ptrs, grads);
  }

  for (int students : {1, 2}) {
    cfg.kd.students = students;
    const auto result = train::train(cfg, data);
    REQUIRE(result.log.size() == reference.size());
    for (std::size_t e = 0; e < reference.size(); ++e) {
      CHECK(result.log[e].str[0] == 0.0);
      CHECK(std::abs(result.log[e].loss[0] - reference[e]) <= 1e-12 * std::max(1.0, std::abs(reference[e])));
    }
  }
}

TEST_CASE("provider fine-tuning") {
  std::vector<std::string> warnings;
  log::set_sink([&](log::Level, const std::string& m) { warnings.push_back(m); });
  features::HashingProvider hashing(8);
  Matrix head = Matrix::Zero(2, 8);
  CHECK(finetune_provider(hashing, {}, 3, 0.1, 4, head).empty());
  log::set_sink({});
  CHECK(warnings.size() == 1);

  features::LookupTableProvider table(32, 4, 3);
  const std::vector<std::string> codes{"strcpy(buf, src)", "strncpy(buf, src, n)", "gets(line)",
                                       "fgets(line, n, f)", "sprintf(out, fmt)", "snprintf(out, n, fmt)",
                                       "memcpy(d, s, n)",  "if (n < cap) memcpy(d, s, n)", "free(p); free(p)",
                                       "free(p); p = NULL"};
  const auto vocab = features::TypeVocabulary(std::vector<std::string>{"Method"});
  std::vector<Sample> samples;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    cpg::CodePropertyGraph g;
    g.function_id = "s" + std::to_string(i);
    g.nodes = {{1, "Method", codes[i], true}};
    g.source_code = codes[i];
    g.label = static_cast<int>(i % 2 == 0);
    samples.push_back(make_sample(g, cpg::Split::kTrain, vocab, table));
  }
  std::vector<const Sample*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  const Matrix before = table.table();
  Matrix head4 = Matrix::Zero(2, 4);
  CHECK(finetune_provider(table, ptrs, 0, 0.05, 4, head4).empty());
  CHECK(table.table() == before);
  const auto losses = finetune_provider(table, ptrs, 3, 0.05, 4, head4);
  REQUIRE(losses.size() == 3);
  CHECK(losses[1] < losses[0]);
  CHECK(losses[2] < losses[1]);
  CHECK(table.table() != before);
}

TEST_CASE("prediction paths") {
  auto cfg = quick_config();
  cfg.lambda = 1.0;
  cfg.max_nodes = 10;
  const auto result = train::train(cfg, corpus(16));
  const auto g = synthetic::make_graph(3, 1, true, 4, 6, 8);
  const auto pred = predict(result.model, g);
  CHECK(pred.decision == decide(pred.pair.p_graph));
  CHECK(pred.pair.p_final == pred.pair.p_graph);
  const auto big = synthetic::make_graph(4, 1, true, 4, 12, 12);
  CHECK_THROWS_AS(predict(result.model, big), RejectedInput);
}

TEST_CASE("fixture graph through a hand-set one-step model") {
  const auto g = cpg::prune_nonleaf_properties(
      cpg::parse_cpg_export(io::read_file(std::filesystem::path(VULGRAPH_FIXTURE_DIR) / "fig2_function.json")));
  TrainConfig cfg;
  cfg.steps = 1;
  cfg.provider.content_dim = 4;
  cfg.lambda = 0.8;
  const std::vector<const cpg::CodePropertyGraph*> ptrs{&g};
  Model m = initialize_model(cfg, ptrs);
  std::mt19937_64 rng(3);
  m.aux_w = vgtest::random_matrix(rng, 2, 4);
  const auto p = predict(m, g);

  // Compose the per-module pieces by hand.
  const features::HashingProvider hp(4);
  const auto nf = features::featurize(g, m.vocab, hp);
  const Matrix x = nf.x();
  ggnn::PropagationTrace trace;
  trace.states = {features::pad_to_state_dim(x, m.ensemble.arch.state_dim)};
  const auto logits = ggnn::readout(trace, x, m.ensemble.students[0], m.ensemble.arch);
  const Vector seq = ggnn::softmax(m.aux_w * hp.embed_sequence(g.source_code));
  const Vector expect = 0.8 * logits.probabilities + 0.2 * seq;
  CHECK((p.pair.p_final - expect).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(p.decision == (expect(1) >= expect(0) ? 1 : 0));
}

TEST_CASE("training failures") {
  auto data = corpus(12);
  for (auto& r : data) r.split = cpg::Split::kTrain;
  CHECK_THROWS_AS(train::train(quick_config(), data), DataError);

  auto cfg = quick_config();
  cfg.reg_weight = 1.0;
  CHECK_THROWS_AS(train::train(cfg, corpus(12)), ConfigError);

  register_loss_hook("regularization", [](ad::Tape& tape, std::span<const Sample* const>, const TrainConfig&) {
    return tape.constant(Matrix::Constant(1, 1, std::nan("")));
  });
  try {
    train::train(cfg, corpus(12));
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    REQUIRE(e.last_good() != nullptr);
    CHECK(e.last_good()->ensemble.size() == 2);
  }
  clear_loss_hooks();
  CHECK_THROWS_AS(register_loss_hook("center", {}), ConfigError);
}
