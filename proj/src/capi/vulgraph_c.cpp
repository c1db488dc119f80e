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

#include "vulgraph/vulgraph.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "core/cpg.hpp"
#include "core/errors.hpp"
#include "core/harness.hpp"
#include "core/log.hpp"
#include "core/synthetic.hpp"
#include "core/tensor_io.hpp"
#include "core/train.hpp"

using namespace vulgraph;
using nlohmann::json;

struct vg_config {
  train::TrainConfig config;
};

struct vg_corpus {
  std::vector<cpg::CorpusRecord> records;
};

struct vg_model {
  train::Model model;
};

namespace {

thread_local std::string g_last_error;

vg_status fail(vg_status status, const std::string& message) {
  g_last_error = message;
  return status;
}

vg_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kParse: return VG_ERR_PARSE;
    case ErrorKind::kIntegrity: return VG_ERR_INTEGRITY;
    case ErrorKind::kMapping: return VG_ERR_MAPPING;
    case ErrorKind::kDimension: return VG_ERR_DIMENSION;
    case ErrorKind::kProvider: return VG_ERR_PROVIDER;
    case ErrorKind::kAlignment: return VG_ERR_ALIGNMENT;
    case ErrorKind::kConfig: return VG_ERR_CONFIG;
    case ErrorKind::kData: return VG_ERR_DATA;
    case ErrorKind::kDivergence: return VG_ERR_DIVERGENCE;
    case ErrorKind::kRejectedInput: return VG_ERR_REJECTED_INPUT;
    case ErrorKind::kIo: return VG_ERR_IO;
    case ErrorKind::kPrecondition: return VG_ERR_PRECONDITION;
  }
  return VG_ERR_INTERNAL;
}

template <typename F>
vg_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return VG_OK;
  } catch (const Error& e) {
    return fail(status_of(e.kind()), std::string(error_kind_name(e.kind())) + ": " + e.what());
  } catch (const json::exception& e) {
    return fail(VG_ERR_PARSE, std::string("ParseError: ") + e.what());
  } catch (const std::bad_alloc&) {
    return fail(VG_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(VG_ERR_INTERNAL, e.what());
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

#define VG_REQUIRE(cond, what) \
  if (!(cond)) return fail(VG_ERR_INVALID_ARGUMENT, what)

cpg::Split to_split(vg_split s) {
  switch (s) {
    case VG_SPLIT_TRAIN: return cpg::Split::kTrain;
    case VG_SPLIT_VALID: return cpg::Split::kValid;
    case VG_SPLIT_TEST: return cpg::Split::kTest;
  }
  throw PreconditionError("unknown split");
}

void fill_metrics(const metrics::MetricsReport& r, vg_metrics* out) {
  out->accuracy = r.accuracy;
  out->precision = r.precision;
  out->recall = r.recall;
  out->f1 = r.f1;
  out->tp = r.tp;
  out->fp = r.fp;
  out->tn = r.tn;
  out->fn = r.fn;
  out->precision_undefined = r.precision_undefined ? 1 : 0;
  out->recall_undefined = r.recall_undefined ? 1 : 0;
}

void fill_prediction(const train::Prediction& p, vg_prediction* out) {
  for (int c = 0; c < 2; ++c) {
    out->p_graph[c] = p.pair.p_graph(c);
    out->p_seq[c] = p.pair.p_seq(c);
    out->p_final[c] = p.pair.p_final(c);
  }
  out->decision = p.decision;
  out->student = static_cast<int>(p.student);
}

}  // namespace

extern "C" {

const char* vg_version(void) { return "1.0.0"; }

const char* vg_last_error(void) { return g_last_error.c_str(); }

const char* vg_status_name(vg_status status) {
  switch (status) {
    case VG_OK: return "ok";
    case VG_ERR_PARSE: return "ParseError";
    case VG_ERR_INTEGRITY: return "IntegrityError";
    case VG_ERR_MAPPING: return "MappingError";
    case VG_ERR_DIMENSION: return "DimensionError";
    case VG_ERR_PROVIDER: return "ProviderError";
    case VG_ERR_ALIGNMENT: return "AlignmentError";
    case VG_ERR_CONFIG: return "ConfigError";
    case VG_ERR_DATA: return "DataError";
    case VG_ERR_DIVERGENCE: return "DivergenceError";
    case VG_ERR_REJECTED_INPUT: return "RejectedInput";
    case VG_ERR_IO: return "IoError";
    case VG_ERR_PRECONDITION: return "PreconditionError";
    case VG_ERR_INVALID_ARGUMENT: return "InvalidArgument";
    case VG_ERR_INTERNAL: return "InternalError";
  }
  return "unknown";
}

void vg_string_free(char* s) { std::free(s); }

void vg_set_log_callback(vg_log_fn fn, void* user) {
  if (!fn) {
    log::set_sink({});
    return;
  }
  log::set_sink([fn, user](log::Level level, const std::string& msg) {
    fn(static_cast<vg_log_level>(static_cast<int>(level)), msg.c_str(), user);
  });
}

vg_status vg_config_new(vg_config** out) {
  VG_REQUIRE(out, "out is null");
  *out = nullptr;
  return guarded([&] { *out = new vg_config(); });
}

vg_status vg_config_load(const char* path, vg_config** out) {
  VG_REQUIRE(path && out, "path/out is null");
  *out = nullptr;
  return guarded([&] { *out = new vg_config{train::load_config(path)}; });
}

vg_status vg_config_from_json(const char* text, vg_config** out) {
  VG_REQUIRE(text && out, "json/out is null");
  *out = nullptr;
  return guarded([&] {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config is not valid JSON");
    *out = new vg_config{train::TrainConfig::from_json(j)};
  });
}

vg_status vg_config_set(vg_config* config, const char* key, const char* json_value) {
  VG_REQUIRE(config && key && json_value, "config/key/value is null");
  return guarded([&] {
    json value = json::parse(json_value, nullptr, false);
    if (value.is_discarded()) throw ConfigError(std::string("value for '") + key + "' is not valid JSON");
    std::string pointer = "/" + std::string(key);
    for (char& c : pointer)
      if (c == '.') c = '/';
    json j = config->config.to_json();
    try {
      j[json::json_pointer(pointer)] = value;
    } catch (const json::exception&) {
      throw ConfigError(std::string("cannot set config key '") + key + "'");
    }
    config->config = train::TrainConfig::from_json(j);
  });
}

vg_status vg_config_set_seed(vg_config* config, uint64_t seed) {
  VG_REQUIRE(config, "config is null");
  config->config.seed = seed;
  return VG_OK;
}

vg_status vg_config_to_json(const vg_config* config, char** out) {
  VG_REQUIRE(config && out, "config/out is null");
  *out = nullptr;
  return guarded([&] { *out = dup_string(config->config.to_json().dump(2)); });
}

void vg_config_free(vg_config* config) { delete config; }

vg_status vg_ingest(const char* input_dir, const char* out_jsonl, size_t max_nodes, int dedup, vg_ingest_stats* stats) {
  VG_REQUIRE(input_dir && out_jsonl, "input/output path is null");
  return guarded([&] {
    cpg::IngestOptions options;
    options.max_nodes = max_nodes;
    options.dedup = dedup != 0;
    cpg::IngestStats s;
    const auto records = cpg::ingest_documents(input_dir, options, &s);
    cpg::write_corpus(out_jsonl, records);
    if (stats) *stats = {s.documents, s.rejected, s.oversized, s.duplicates, s.written};
  });
}

vg_status vg_corpus_load(const char* path, vg_corpus** out) {
  VG_REQUIRE(path && out, "path/out is null");
  *out = nullptr;
  return guarded([&] { *out = new vg_corpus{cpg::read_corpus(path)}; });
}

vg_status vg_corpus_synthetic(size_t count, uint64_t seed, double valid_fraction, double test_fraction,
                              vg_corpus** out) {
  VG_REQUIRE(out, "out is null");
  *out = nullptr;
  return guarded([&] {
    synthetic::Options o;
    o.count = count;
    o.seed = seed;
    o.valid_fraction = valid_fraction;
    o.test_fraction = test_fraction;
    *out = new vg_corpus{synthetic::make_corpus(o)};
  });
}

vg_status vg_corpus_save(const vg_corpus* corpus, const char* path) {
  VG_REQUIRE(corpus && path, "corpus/path is null");
  return guarded([&] { cpg::write_corpus(path, corpus->records); });
}

size_t vg_corpus_size(const vg_corpus* corpus) { return corpus ? corpus->records.size() : 0; }

size_t vg_corpus_split_size(const vg_corpus* corpus, vg_split split) {
  if (!corpus) return 0;
  size_t n = 0;
  for (const auto& r : corpus->records)
    if (static_cast<int>(r.split) == static_cast<int>(split)) ++n;
  return n;
}

void vg_corpus_free(vg_corpus* corpus) { delete corpus; }

vg_status vg_train(const vg_config* config, const vg_corpus* corpus, vg_epoch_fn on_epoch, void* user,
                   vg_model** out) {
  VG_REQUIRE(config && corpus && out, "config/corpus/out is null");
  *out = nullptr;
  try {
    train::EpochCallback cb;
    if (on_epoch) cb = [on_epoch, user](const train::EpochLog& e) { on_epoch(e.to_json().dump().c_str(), user); };
    auto result = train::train(config->config, corpus->records, cb);
    *out = new vg_model{std::move(result.model)};
    g_last_error.clear();
    return VG_OK;
  } catch (const train::DivergenceError& e) {
    if (e.last_good()) *out = new vg_model{*e.last_good()};
    return fail(VG_ERR_DIVERGENCE, std::string("DivergenceError: ") + e.what());
  } catch (...) {
    return guarded([] { throw; });
  }
}

vg_status vg_model_save(const vg_model* model, const char* path) {
  VG_REQUIRE(model && path, "model/path is null");
  return guarded([&] { train::save_checkpoint(model->model, path); });
}

vg_status vg_model_load(const char* path, vg_model** out) {
  VG_REQUIRE(path && out, "path/out is null");
  *out = nullptr;
  return guarded([&] { *out = new vg_model{train::load_checkpoint(path)}; });
}

vg_status vg_model_config(const vg_model* model, vg_config** out) {
  VG_REQUIRE(model && out, "model/out is null");
  *out = nullptr;
  return guarded([&] { *out = new vg_config{model->model.config}; });
}

void vg_model_free(vg_model* model) { delete model; }

vg_status vg_evaluate(const vg_model* model, const vg_corpus* corpus, vg_split split, vg_metrics* out) {
  VG_REQUIRE(model && corpus && out, "model/corpus/out is null");
  return guarded([&] {
    const auto samples = harness::split_samples(model->model, corpus->records, to_split(split));
    if (samples.empty())
      throw DataError(std::string("corpus has no ") + cpg::split_name(to_split(split)) + " records");
    fill_metrics(train::evaluate(model->model, samples), out);
  });
}

vg_status vg_metrics_to_json(const vg_metrics* m, char** out) {
  VG_REQUIRE(m && out, "metrics/out is null");
  *out = nullptr;
  return guarded([&] {
    metrics::MetricsReport r;
    r.accuracy = m->accuracy;
    r.precision = m->precision;
    r.recall = m->recall;
    r.f1 = m->f1;
    r.tp = m->tp;
    r.fp = m->fp;
    r.tn = m->tn;
    r.fn = m->fn;
    r.precision_undefined = m->precision_undefined != 0;
    r.recall_undefined = m->recall_undefined != 0;
    *out = dup_string(r.to_json().dump(2));
  });
}

vg_status vg_predict_json(const vg_model* model, const char* cpg_json, vg_prediction* out) {
  VG_REQUIRE(model && cpg_json && out, "model/json/out is null");
  return guarded([&] { fill_prediction(train::predict(model->model, cpg::parse_cpg_export(std::string_view(cpg_json))), out); });
}

vg_status vg_predict_file(const vg_model* model, const char* cpg_path, vg_prediction* out) {
  VG_REQUIRE(model && cpg_path && out, "model/path/out is null");
  return guarded([&] {
    const std::string text = io::read_file(cpg_path);
    fill_prediction(train::predict(model->model, cpg::parse_cpg_export(std::string_view(text))), out);
  });
}

vg_status vg_sweep_lambda(const vg_model* model, const vg_corpus* corpus, const char* grid, char** csv_out) {
  VG_REQUIRE(model && corpus && grid && csv_out, "model/corpus/grid/out is null");
  *csv_out = nullptr;
  return guarded([&] {
    const auto values = harness::parse_grid(grid);
    const auto samples = harness::split_samples(model->model, corpus->records, cpg::Split::kValid);
    if (samples.empty()) throw DataError("corpus has no valid records to sweep over");
    const auto result = harness::lambda_sweep(harness::cache_branches(model->model, samples), values);
    *csv_out = dup_string(result.to_csv());
  });
}

vg_status vg_ablate_students(const vg_config* config, const vg_corpus* corpus, const char* counts, char** csv_out) {
  VG_REQUIRE(config && corpus && counts && csv_out, "config/corpus/counts/out is null");
  *csv_out = nullptr;
  return guarded([&] {
    const auto values = harness::parse_counts(counts);
    *csv_out = dup_string(harness::student_ablation(values, config->config, corpus->records).to_csv());
  });
}

vg_status vg_report_cwe(const vg_model* model, const vg_corpus* corpus, vg_split split, size_t top, char** csv_out) {
  VG_REQUIRE(model && corpus && csv_out, "model/corpus/out is null");
  *csv_out = nullptr;
  return guarded([&] {
    std::vector<int> preds, labels;
    std::vector<std::vector<std::string>> tags;
    for (const auto& r : corpus->records) {
      if (r.split != to_split(split) || r.graph.node_count() > model->model.config.max_nodes) continue;
      const Sample s = train::prepare(model->model, r.graph, r.split);
      preds.push_back(train::decide(train::branch_outputs(model->model, s).p_final));
      labels.push_back(r.graph.label);
      tags.push_back(r.graph.cwe_tags);
    }
    if (preds.empty())
      throw DataError(std::string("corpus has no ") + cpg::split_name(to_split(split)) + " records");
    const auto rows = metrics::per_cwe_accuracy(preds, labels, tags, top);
    *csv_out = dup_string(harness::cwe_csv(rows));
  });
}

vg_status vg_write_run_config(const char* command, const vg_config* config, const char* inputs_json, const char* output,
                              const char* options_json) {
  VG_REQUIRE(command && config && output, "command/config/output is null");
  return guarded([&] {
    harness::RunConfig run;
    run.command = command;
    run.config = config->config;
    if (inputs_json) run.inputs = json::parse(inputs_json).get<std::map<std::string, std::string>>();
    if (options_json) run.options = json::parse(options_json).get<std::map<std::string, std::string>>();
    run.outputs["output"] = output;
    harness::write_run_config(run, output);
  });
}

}  // extern "C"
