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

// vulgraph command-line front end. Talks to the library only through the C API.

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vulgraph/vulgraph.h"

using nlohmann::json;

namespace {

struct Failure {
  int code;
};

void check(vg_status s) {
  if (s != VG_OK) {
    std::cerr << "vulgraph: " << vg_last_error() << "\n";
    throw Failure{1};
  }
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Config = Handle<vg_config, vg_config_free>;
using Corpus = Handle<vg_corpus, vg_corpus_free>;
using Model = Handle<vg_model, vg_model_free>;

std::string take(char* s) {
  std::string out = s ? s : "";
  vg_string_free(s);
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) {
    std::cerr << "vulgraph: cannot write " << path << "\n";
    throw Failure{1};
  }
}

void apply_seed_env(vg_config* config) {
  const char* env = std::getenv("VULGRAPH_SEED");
  if (!env || !*env) return;
  char* end = nullptr;
  errno = 0;
  const unsigned long long seed = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || *env == '-') {
    std::cerr << "vulgraph: VULGRAPH_SEED must be a non-negative integer\n";
    throw Failure{1};
  }
  check(vg_config_set_seed(config, seed));
}

void apply_overrides(vg_config* config, const std::vector<std::string>& sets) {
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "vulgraph: --set expects key=value, got '" << kv << "'\n";
      throw Failure{2};
    }
    std::string value = kv.substr(eq + 1);
    if (json::parse(value, nullptr, false).is_discarded()) value = json(value).dump();
    check(vg_config_set(config, kv.substr(0, eq).c_str(), value.c_str()));
  }
}

void run_config(const char* command, const vg_config* config, const json& inputs, const std::string& output,
                const json& options) {
  check(vg_write_run_config(command, config, inputs.dump().c_str(), output.c_str(), options.dump().c_str()));
}

vg_split parse_split(const std::string& s) {
  if (s == "train") return VG_SPLIT_TRAIN;
  if (s == "valid") return VG_SPLIT_VALID;
  return VG_SPLIT_TEST;
}

json metrics_json(const vg_metrics& m) {
  char* text = nullptr;
  check(vg_metrics_to_json(&m, &text));
  return json::parse(take(text));
}

void print_epoch(const char* epoch_json, void* user) {
  auto* log = static_cast<std::ofstream*>(user);
  *log << epoch_json << "\n";
  log->flush();
  const json e = json::parse(epoch_json);
  std::cerr << "epoch " << e["epoch"] << " [" << e["stage"].get<std::string>() << "] valid f1 "
            << e["valid"]["f1"].get<double>() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vulgraph: graph + code-model vulnerability detection"};
  app.require_subcommand(1);

  std::string input, out, config_path, corpus_path, ckpt, report, cpg, grid = "0:1:0.1", counts = "1,2,3", split = "test",
                                                                        log_path;
  std::vector<std::string> sets;
  std::size_t max_nodes = 500, top = 30;
  bool no_dedup = false;

  auto* ingest = app.add_subcommand("ingest", "Parse CPG documents into a corpus file");
  ingest->add_option("--input", input, "Directory of *.json / *.jsonl documents")->required();
  ingest->add_option("--out", out, "Output corpus (JSON Lines)")->required();
  ingest->add_option("--max-nodes", max_nodes, "Drop graphs with more nodes");
  ingest->add_flag("--no-dedup", no_dedup, "Keep duplicate functions");

  auto* trn = app.add_subcommand("train", "Train a model");
  trn->add_option("--config", config_path, "JSON config");
  trn->add_option("--corpus", corpus_path, "Corpus file")->required();
  trn->add_option("--out", out, "Checkpoint path")->required();
  trn->add_option("--log", log_path, "Epoch log (JSON Lines); default <out>.log.jsonl");
  trn->add_option("--set", sets, "Config override key=value");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint");
  ev->add_option("--ckpt", ckpt, "Checkpoint")->required();
  ev->add_option("--corpus", corpus_path, "Corpus file")->required();
  ev->add_option("--report", report, "Metrics JSON output")->required();
  ev->add_option("--split", split, "train | valid | test")->check(CLI::IsMember({"train", "valid", "test"}));

  auto* pred = app.add_subcommand("predict", "Classify one CPG document");
  pred->add_option("--ckpt", ckpt, "Checkpoint")->required();
  pred->add_option("--cpg", cpg, "CPG JSON document")->required();
  pred->add_option("--out", out, "Write the prediction JSON here as well as stdout");

  auto* sweep = app.add_subcommand("sweep-lambda", "Metrics over a lambda grid on the valid split");
  sweep->add_option("--ckpt", ckpt, "Checkpoint")->required();
  sweep->add_option("--corpus", corpus_path, "Corpus file")->required();
  sweep->add_option("--grid", grid, "start:stop:step or comma list");
  sweep->add_option("--out", out, "CSV output")->required();

  auto* ablate = app.add_subcommand("ablate-students", "Train and evaluate per student count");
  ablate->add_option("--config", config_path, "JSON config");
  ablate->add_option("--corpus", corpus_path, "Corpus file")->required();
  ablate->add_option("--counts", counts, "Comma-separated student counts");
  ablate->add_option("--out", out, "CSV output")->required();
  ablate->add_option("--set", sets, "Config override key=value");

  auto* cwe = app.add_subcommand("report-cwe", "Per-CWE accuracy table");
  cwe->add_option("--ckpt", ckpt, "Checkpoint")->required();
  cwe->add_option("--corpus", corpus_path, "Corpus file")->required();
  cwe->add_option("--top", top, "Rows to keep");
  cwe->add_option("--split", split, "train | valid | test")->check(CLI::IsMember({"train", "valid", "test"}));
  cwe->add_option("--out", out, "CSV output")->required();

  if (argc < 2) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    std::cerr << app.help();
    return 2;
  }

  try {
    auto load_config = [&](Config& config) {
      if (config_path.empty())
        check(vg_config_new(config.out()));
      else
        check(vg_config_load(config_path.c_str(), config.out()));
      apply_overrides(config.get(), sets);
      apply_seed_env(config.get());
    };

    if (*ingest) {
      vg_ingest_stats stats{};
      check(vg_ingest(input.c_str(), out.c_str(), max_nodes, no_dedup ? 0 : 1, &stats));
      Config config;
      check(vg_config_new(config.out()));
      check(vg_config_set(config.get(), "max_nodes", std::to_string(max_nodes).c_str()));
      run_config("ingest", config.get(), {{"input", input}}, out,
                 {{"max_nodes", std::to_string(max_nodes)}, {"dedup", no_dedup ? "false" : "true"}});
      std::cout << json{{"documents", stats.documents}, {"rejected", stats.rejected}, {"oversized", stats.oversized},
                        {"duplicates", stats.duplicates}, {"written", stats.written}}
                       .dump()
                << "\n";
    } else if (*trn) {
      Config config;
      load_config(config);
      Corpus corpus;
      check(vg_corpus_load(corpus_path.c_str(), corpus.out()));
      if (log_path.empty()) log_path = out + ".log.jsonl";
      std::ofstream log(log_path);
      Model model;
      const vg_status s = vg_train(config.get(), corpus.get(), print_epoch, &log, model.out());
      if (s == VG_ERR_DIVERGENCE && model.get()) {
        std::cerr << "vulgraph: " << vg_last_error() << "\n";
        const std::string rescue = out + ".last_good";
        check(vg_model_save(model.get(), rescue.c_str()));
        std::cerr << "vulgraph: last good model written to " << rescue << "\n";
        return 1;
      }
      check(s);
      check(vg_model_save(model.get(), out.c_str()));
      run_config("train", config.get(), {{"config", config_path}, {"corpus", corpus_path}}, out, {{"log", log_path}});
    } else if (*ev) {
      Model model;
      check(vg_model_load(ckpt.c_str(), model.out()));
      Corpus corpus;
      check(vg_corpus_load(corpus_path.c_str(), corpus.out()));
      vg_metrics m{};
      check(vg_evaluate(model.get(), corpus.get(), parse_split(split), &m));
      const json j = metrics_json(m);
      write_text(report, j.dump(2) + "\n");
      Config config;
      check(vg_model_config(model.get(), config.out()));
      run_config("eval", config.get(), {{"ckpt", ckpt}, {"corpus", corpus_path}}, report, {{"split", split}});
      std::cout << j.dump() << "\n";
    } else if (*pred) {
      Model model;
      check(vg_model_load(ckpt.c_str(), model.out()));
      vg_prediction p{};
      check(vg_predict_file(model.get(), cpg.c_str(), &p));
      const json j = {{"decision", p.decision},
                      {"label", p.decision == 1 ? "vulnerable" : "safe"},
                      {"p_final", {p.p_final[0], p.p_final[1]}},
                      {"p_graph", {p.p_graph[0], p.p_graph[1]}},
                      {"p_seq", {p.p_seq[0], p.p_seq[1]}},
                      {"student", p.student}};
      std::cout << j.dump() << "\n";
      if (!out.empty()) {
        write_text(out, j.dump(2) + "\n");
        Config config;
        check(vg_model_config(model.get(), config.out()));
        run_config("predict", config.get(), {{"ckpt", ckpt}, {"cpg", cpg}}, out, json::object());
      }
    } else if (*sweep) {
      Model model;
      check(vg_model_load(ckpt.c_str(), model.out()));
      Corpus corpus;
      check(vg_corpus_load(corpus_path.c_str(), corpus.out()));
      char* csv = nullptr;
      check(vg_sweep_lambda(model.get(), corpus.get(), grid.c_str(), &csv));
      write_text(out, take(csv));
      Config config;
      check(vg_model_config(model.get(), config.out()));
      run_config("sweep-lambda", config.get(), {{"ckpt", ckpt}, {"corpus", corpus_path}}, out, {{"grid", grid}});
    } else if (*ablate) {
      Config config;
      load_config(config);
      Corpus corpus;
      check(vg_corpus_load(corpus_path.c_str(), corpus.out()));
      char* csv = nullptr;
      check(vg_ablate_students(config.get(), corpus.get(), counts.c_str(), &csv));
      write_text(out, take(csv));
      run_config("ablate-students", config.get(), {{"config", config_path}, {"corpus", corpus_path}}, out,
                 {{"counts", counts}});
    } else if (*cwe) {
      Model model;
      check(vg_model_load(ckpt.c_str(), model.out()));
      Corpus corpus;
      check(vg_corpus_load(corpus_path.c_str(), corpus.out()));
      char* csv = nullptr;
      check(vg_report_cwe(model.get(), corpus.get(), parse_split(split), top, &csv));
      write_text(out, take(csv));
      Config config;
      check(vg_model_config(model.get(), config.out()));
      run_config("report-cwe", config.get(), {{"ckpt", ckpt}, {"corpus", corpus_path}}, out,
                 {{"top", std::to_string(top)}, {"split", split}});
    }
  } catch (const Failure& f) {
    return f.code;
  }
  return 0;
}
