/* SPDX-License-Identifier: Apache-2.0 */
/*
 * Stable C interface to the peek toolkit.
 *
 * Objects are opaque handles created by *_load / *_create functions and
 * released with the matching *_free. Every fallible call returns a
 * peek_status; on failure a message for the calling thread is available
 * from peek_last_error() until the next failing call on that thread.
 * Strings returned through char** out-parameters are owned by the caller
 * and must be released with peek_string_free().
 */
#ifndef PEEK_PEEK_H
#define PEEK_PEEK_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PEEK_BUILDING_LIBRARY)
#    define PEEK_API __declspec(dllexport)
#  else
#    define PEEK_API __declspec(dllimport)
#  endif
#else
#  define PEEK_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum peek_status {
  PEEK_OK = 0,
  PEEK_E_VALIDATION = 1, /* bad input data or configuration */
  PEEK_E_BACKEND = 2,    /* LLM backend failure threshold exceeded */
  PEEK_E_IO = 3,         /* missing or unwritable file */
  PEEK_E_ARGUMENT = 4,   /* null handle or out-of-range argument */
  PEEK_E_INTERNAL = 5
} peek_status;

typedef struct peek_config peek_config;
typedef struct peek_graph peek_graph;
typedef struct peek_store peek_store;
typedef struct peek_model peek_model;

PEEK_API const char* peek_version(void);
PEEK_API const char* peek_last_error(void);
PEEK_API void peek_string_free(char* s);

/* ---- run configuration ------------------------------------------------ */

/* NULL path yields the defaults with the current directory as base. */
PEEK_API peek_status peek_config_load(const char* path, peek_config** out);
PEEK_API peek_status peek_config_from_json(const char* json_text, const char* base_dir,
                                           peek_config** out);
/* Dotted key ("train.learning_rates"); value parsed as JSON, else a string. */
PEEK_API peek_status peek_config_set(peek_config* cfg, const char* dotted_key, const char* value);
PEEK_API peek_status peek_config_hash(const peek_config* cfg, char** out);
PEEK_API peek_status peek_config_run_dir(const peek_config* cfg, char** out);
PEEK_API peek_status peek_config_dump(const peek_config* cfg, char** out);
PEEK_API void peek_config_free(peek_config* cfg);

/* ---- pipeline commands (summary is a JSON object) ------------------------ */

PEEK_API peek_status peek_build_dataset(const peek_config* cfg, char** summary_json);
PEEK_API peek_status peek_probe(const peek_config* cfg, char** summary_json);
PEEK_API peek_status peek_train_eval(const peek_config* cfg, char** summary_json);
/* axis: "negatives", "fraction" or "temperature"; values from sweep.values. */
PEEK_API peek_status peek_sweep(const peek_config* cfg, const char* axis, char** summary_json);
PEEK_API peek_status peek_report(const char* const* run_dirs, size_t n_run_dirs,
                                 const char* const* excluded_groups, size_t n_excluded,
                                 char** text);

/* ---- knowledge graph -------------------------------------------------- */

PEEK_API peek_status peek_graph_load(const char* path, peek_graph** out);
PEEK_API size_t peek_graph_size(const peek_graph* g);
PEEK_API size_t peek_graph_relation_count(const peek_graph* g);
PEEK_API size_t peek_graph_entity_count(const peek_graph* g);
PEEK_API peek_status peek_graph_contains(const peek_graph* g, const char* head,
                                         const char* relation, const char* tail, int* out);
PEEK_API peek_status peek_graph_sample(const peek_graph* g, double fraction, uint64_t seed,
                                       peek_graph** out);
PEEK_API void peek_graph_free(peek_graph* g);

/* ---- embedding store -------------------------------------------------- */

PEEK_API peek_status peek_store_load(const char* path, peek_store** out);
PEEK_API size_t peek_store_dim(const peek_store* s);
PEEK_API size_t peek_store_size(const peek_store* s);
/* *data stays valid until the store is freed. */
PEEK_API peek_status peek_store_get(const peek_store* s, const char* id, const float** data,
                                    size_t* dim);
PEEK_API void peek_store_free(peek_store* s);

/* ---- trained linear head ---------------------------------------------- */

PEEK_API peek_status peek_model_load(const char* path, peek_model** out);
PEEK_API size_t peek_model_dim(const peek_model* m);
PEEK_API peek_status peek_model_predict(const peek_model* m, const float* embedding, size_t dim,
                                        double* logit, double* probability);
PEEK_API void peek_model_free(peek_model* m);

/* ---- probing and metrics ---------------------------------------------- */

PEEK_API peek_status peek_build_binary_prompt(const char* fact_text, int polarity_true, int cot,
                                              char** out);
/* *label is 1, 0, or -1 when the response is not a yes/no answer. */
PEEK_API peek_status peek_parse_binary_response(const char* raw, int polarity_true,
                                                int fact_is_positive, int* label);
PEEK_API peek_status peek_accuracy(const int* predicted, const int* truth, size_t n, double* out);
PEEK_API peek_status peek_auc(const double* scores, const int* labels, size_t n, double* out);
PEEK_API peek_status peek_mae(const double* predicted, const double* target, size_t n,
                              double* out);

#ifdef __cplusplus
}
#endif

#endif /* PEEK_PEEK_H */
