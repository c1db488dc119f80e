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

#ifndef VULGRAPH_VULGRAPH_H
#define VULGRAPH_VULGRAPH_H

/* C interface to the vulgraph library. All handles are opaque. Functions
 * return a vg_status; on failure vg_last_error() describes the problem for
 * the calling thread. Strings handed out by the library are released with
 * vg_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define VG_API __declspec(dllexport)
#else
#define VG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum vg_status {
  VG_OK = 0,
  VG_ERR_PARSE = 1,
  VG_ERR_INTEGRITY = 2,
  VG_ERR_MAPPING = 3,
  VG_ERR_DIMENSION = 4,
  VG_ERR_PROVIDER = 5,
  VG_ERR_ALIGNMENT = 6,
  VG_ERR_CONFIG = 7,
  VG_ERR_DATA = 8,
  VG_ERR_DIVERGENCE = 9,
  VG_ERR_REJECTED_INPUT = 10,
  VG_ERR_IO = 11,
  VG_ERR_PRECONDITION = 12,
  VG_ERR_INVALID_ARGUMENT = 13,
  VG_ERR_INTERNAL = 14
} vg_status;

typedef struct vg_config vg_config;
typedef struct vg_corpus vg_corpus;
typedef struct vg_model vg_model;

typedef enum vg_split { VG_SPLIT_TRAIN = 0, VG_SPLIT_VALID = 1, VG_SPLIT_TEST = 2 } vg_split;

typedef struct vg_metrics {
  double accuracy;
  double precision;
  double recall;
  double f1;
  uint64_t tp, fp, tn, fn;
  int precision_undefined;
  int recall_undefined;
} vg_metrics;

typedef struct vg_prediction {
  double p_graph[2];
  double p_seq[2];
  double p_final[2];
  int decision;
  int student;
} vg_prediction;

typedef struct vg_ingest_stats {
  uint64_t documents;
  uint64_t rejected;
  uint64_t oversized;
  uint64_t duplicates;
  uint64_t written;
} vg_ingest_stats;

typedef enum vg_log_level { VG_LOG_INFO = 0, VG_LOG_WARNING = 1, VG_LOG_ERROR = 2 } vg_log_level;
typedef void (*vg_log_fn)(vg_log_level level, const char* message, void* user);
/* Called after every epoch with the epoch record as a JSON string. */
typedef void (*vg_epoch_fn)(const char* epoch_json, void* user);

VG_API const char* vg_version(void);
VG_API const char* vg_last_error(void);
VG_API const char* vg_status_name(vg_status status);
VG_API void vg_string_free(char* s);
/* NULL restores the default stderr sink. */
VG_API void vg_set_log_callback(vg_log_fn fn, void* user);

/* Configuration. */
VG_API vg_status vg_config_new(vg_config** out);
VG_API vg_status vg_config_load(const char* path, vg_config** out);
VG_API vg_status vg_config_from_json(const char* json, vg_config** out);
/* Dotted key ("kd.alpha") with a JSON value ("0.5", "\"rbf\""). */
VG_API vg_status vg_config_set(vg_config* config, const char* key, const char* json_value);
VG_API vg_status vg_config_set_seed(vg_config* config, uint64_t seed);
VG_API vg_status vg_config_to_json(const vg_config* config, char** out);
VG_API void vg_config_free(vg_config* config);

/* Corpus. */
VG_API vg_status vg_ingest(const char* input_dir, const char* out_jsonl, size_t max_nodes, int dedup,
                           vg_ingest_stats* stats);
VG_API vg_status vg_corpus_load(const char* path, vg_corpus** out);
VG_API vg_status vg_corpus_synthetic(size_t count, uint64_t seed, double valid_fraction, double test_fraction,
                                     vg_corpus** out);
VG_API vg_status vg_corpus_save(const vg_corpus* corpus, const char* path);
VG_API size_t vg_corpus_size(const vg_corpus* corpus);
VG_API size_t vg_corpus_split_size(const vg_corpus* corpus, vg_split split);
VG_API void vg_corpus_free(vg_corpus* corpus);

/* Training. On VG_ERR_DIVERGENCE, *out receives the last good model when one exists. */
VG_API vg_status vg_train(const vg_config* config, const vg_corpus* corpus, vg_epoch_fn on_epoch, void* user,
                          vg_model** out);
VG_API vg_status vg_model_save(const vg_model* model, const char* path);
VG_API vg_status vg_model_load(const char* path, vg_model** out);
VG_API vg_status vg_model_config(const vg_model* model, vg_config** out);
VG_API void vg_model_free(vg_model* model);

/* Evaluation and prediction. */
VG_API vg_status vg_evaluate(const vg_model* model, const vg_corpus* corpus, vg_split split, vg_metrics* out);
VG_API vg_status vg_metrics_to_json(const vg_metrics* metrics, char** out);
VG_API vg_status vg_predict_json(const vg_model* model, const char* cpg_json, vg_prediction* out);
VG_API vg_status vg_predict_file(const vg_model* model, const char* cpg_path, vg_prediction* out);

/* Harnesses. Each returns CSV text in *csv_out. */
VG_API vg_status vg_sweep_lambda(const vg_model* model, const vg_corpus* corpus, const char* grid, char** csv_out);
VG_API vg_status vg_ablate_students(const vg_config* config, const vg_corpus* corpus, const char* counts,
                                    char** csv_out);
VG_API vg_status vg_report_cwe(const vg_model* model, const vg_corpus* corpus, vg_split split, size_t top,
                               char** csv_out);

/* Writes "<output>.runconfig.json" describing the command that produced output. */
VG_API vg_status vg_write_run_config(const char* command, const vg_config* config, const char* inputs_json,
                                     const char* output, const char* options_json);

#ifdef __cplusplus
}
#endif

#endif
