// Copyright 2026 The guidegen Authors.
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


/* C interface to the guidegen library. All strings are UTF-8 and
 * NUL-terminated. Strings returned through `char**` out-parameters are owned
 * by the caller and must be released with gg_string_free. Handles are
 * released with their matching *_free function; passing NULL is allowed.
 *
 * On failure a function returns a non-zero gg_status and the message is
 * available from gg_last_error on the same thread. */

#ifndef GUIDEGEN_GUIDEGEN_H_
#define GUIDEGEN_GUIDEGEN_H_

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define GG_API __declspec(dllexport)
#else
#define GG_API __attribute__((visibility("default")))
#endif

typedef enum gg_status {
  GG_OK = 0,
  GG_ERR_INVALID_ARGUMENT = 1,
  GG_ERR_NOT_FOUND = 2,
  GG_ERR_CONFIG = 3,
  GG_ERR_PARSE = 4,
  GG_ERR_IO = 5,
  GG_ERR_TRANSPORT = 6,
  GG_ERR_RUNTIME = 7
} gg_status;

typedef struct gg_config gg_config;
typedef struct gg_schema gg_schema;
typedef struct gg_instances gg_instances;

GG_API const char* gg_version(void);
GG_API const char* gg_status_name(gg_status status);
/* Message of the last failure on this thread, or "" if none. */
GG_API const char* gg_last_error(void);
GG_API void gg_string_free(char* s);

/* ---- run configuration ---- */

GG_API gg_status gg_config_load(const char* path, gg_config** out);
/* `base_dir` anchors relative paths; NULL means the working directory. */
GG_API gg_status gg_config_parse(const char* json_text, const char* base_dir, gg_config** out);
/* Dotted key override, e.g. ("client.temperature", "0.2"). */
GG_API gg_status gg_config_set(gg_config* config, const char* key, const char* value);
/* Resolved configuration as JSON. */
GG_API gg_status gg_config_describe(const gg_config* config, char** out_json);
GG_API void gg_config_free(gg_config* config);

/* ---- commands ----
 * Each command writes a JSON object {"report", "table", "warnings"} to
 * `out_json`. Warnings do not make the call fail. */

GG_API gg_status gg_generate(const gg_config* config, int resume, char** out_json);
/* `grounding` is "exact", "normalized" or "off". */
GG_API gg_status gg_validate_dataset(const char* dataset_path, const char* grounding,
                                     const char* out_dir, int keep_empty, char** out_json);
GG_API gg_status gg_stats(const char* dataset_path, size_t top_k, char** out_json);
GG_API gg_status gg_overlap(const char* dataset_path, const char* labels_dir,
                            int case_insensitive, char** out_json);
GG_API gg_status gg_emit_train(const char* dataset_path, const char* out_file,
                               const char* grounding, char** out_json);
/* `match` is "exact" or "normalized". */
GG_API gg_status gg_eval(const char* gold_dir, const char* pred_dir, const char* match,
                         char** out_json);

/* ---- notation ---- */

GG_API gg_status gg_schema_parse(const char* text, gg_schema** out);
GG_API gg_status gg_schema_print(const gg_schema* schema, char** out_text);
GG_API size_t gg_schema_class_count(const gg_schema* schema);
GG_API void gg_schema_free(gg_schema* schema);

GG_API gg_status gg_instances_parse(const char* text, gg_instances** out);
GG_API gg_status gg_instances_print(const gg_instances* instances, char** out_text);
GG_API size_t gg_instances_count(const gg_instances* instances);
GG_API void gg_instances_free(gg_instances* instances);

/* Validation report as JSON for the instances against the schema and the
 * source text. */
GG_API gg_status gg_validate_instances(const gg_instances* instances, const gg_schema* schema,
                                       const char* doc_id, const char* text,
                                       const char* grounding, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* GUIDEGEN_GUIDEGEN_H_ */
