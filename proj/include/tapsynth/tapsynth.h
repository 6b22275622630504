#ifndef TAPSYNTH_H
#define TAPSYNTH_H

#include <stddef.h>

#if defined(_WIN32)
#  define TAPSYNTH_API __declspec(dllexport)
#elif defined(__GNUC__)
#  define TAPSYNTH_API __attribute__((visibility("default")))
#else
#  define TAPSYNTH_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tapsynth_status {
    TAPSYNTH_OK = 0,
    TAPSYNTH_INVALID_ARGUMENT = 1,
    TAPSYNTH_PARSE = 2,
    TAPSYNTH_DUPLICATE_ID = 3,
    TAPSYNTH_NOT_FOUND = 4,
    TAPSYNTH_KIND_MISMATCH = 5,
    TAPSYNTH_DIM_MISMATCH = 6,
    TAPSYNTH_CORRUPT_FILE = 7,
    TAPSYNTH_UNKNOWN_ID = 8,
    TAPSYNTH_PROVIDER = 9,
    TAPSYNTH_BACKEND = 10,
    TAPSYNTH_EXHAUSTED = 11,
    TAPSYNTH_IO = 12,
    TAPSYNTH_CONFIG = 13,
    TAPSYNTH_INTERNAL = 14
} tapsynth_status;

typedef struct tapsynth_catalog tapsynth_catalog;
typedef struct tapsynth_engine tapsynth_engine;

/* Strings returned through out-parameters are heap-allocated and must be
   released with tapsynth_string_free. */
TAPSYNTH_API void tapsynth_string_free(char* s);

/* Message of the last failed call on this thread; empty after success. */
TAPSYNTH_API const char* tapsynth_last_error(void);
TAPSYNTH_API const char* tapsynth_status_name(tapsynth_status status);
TAPSYNTH_API const char* tapsynth_version(void);

/* Catalog */
TAPSYNTH_API tapsynth_status tapsynth_catalog_load(const char* path, tapsynth_catalog** out);
TAPSYNTH_API tapsynth_status tapsynth_catalog_parse(const char* json_text, tapsynth_catalog** out);
TAPSYNTH_API void tapsynth_catalog_free(tapsynth_catalog* catalog);
TAPSYNTH_API tapsynth_status tapsynth_catalog_counts(const tapsynth_catalog* catalog, size_t* triggers,
                                                     size_t* actions, size_t* categories);
/* JSON array of strings. */
TAPSYNTH_API tapsynth_status tapsynth_catalog_warnings(const tapsynth_catalog* catalog, char** out_json);
/* Canonical JSON serialization. */
TAPSYNTH_API tapsynth_status tapsynth_catalog_serialize(const tapsynth_catalog* catalog, char** out_json);
TAPSYNTH_API tapsynth_status tapsynth_catalog_render_text(const tapsynth_catalog* catalog, const char* entry_id,
                                                          char** out_text);

/* Engine. `config_json` follows the documented config shape; `base_dir`
   (may be NULL) anchors relative paths. */
TAPSYNTH_API tapsynth_status tapsynth_engine_create(const char* config_json, const char* base_dir,
                                                    tapsynth_engine** out);
TAPSYNTH_API void tapsynth_engine_free(tapsynth_engine* engine);
/* JSON array of catalog warnings. */
TAPSYNTH_API tapsynth_status tapsynth_engine_warnings(const tapsynth_engine* engine, char** out_json);
TAPSYNTH_API tapsynth_status tapsynth_engine_build_indexes(tapsynth_engine* engine);
TAPSYNTH_API tapsynth_status tapsynth_engine_ensure_indexes(tapsynth_engine* engine);
/* format: "binary" or "text". Writes to the configured vector paths. */
TAPSYNTH_API tapsynth_status tapsynth_engine_export_vectors(const tapsynth_engine* engine, const char* format);
/* JSON object {"triggers": n, "actions": n, "dim": d}. */
TAPSYNTH_API tapsynth_status tapsynth_engine_index_info(const tapsynth_engine* engine, char** out_json);

/* Applet JSON on success. When every attempt fails the status is
   TAPSYNTH_EXHAUSTED and out_json still holds the failure record. */
TAPSYNTH_API tapsynth_status tapsynth_engine_query(const tapsynth_engine* engine, const char* query, char** out_json);

/* `queries_text` holds one query per line (blank lines skipped). Produces
   JSONL in input order; failed queries appear as {"query","status","error"}
   lines. Returns the first non-OK status seen, if any. */
TAPSYNTH_API tapsynth_status tapsynth_engine_run_batch(const tapsynth_engine* engine, const char* queries_text,
                                                       char** out_jsonl);

/* Evaluates gold JSONL. When `predictions_jsonl` is NULL the engine produces
   predictions itself. `options_json` (may be NULL) accepts
   {"ks": [..], "pair_mrr_k": n, "service_level": bool}. Outputs are optional. */
TAPSYNTH_API tapsynth_status tapsynth_engine_evaluate(const tapsynth_engine* engine, const char* gold_jsonl,
                                                      const char* predictions_jsonl, const char* options_json,
                                                      char** out_report_json, char** out_table,
                                                      char** out_predictions_jsonl);

/* Re-checks the metric ordering of a stored report. TAPSYNTH_INTERNAL when
   it is violated. */
TAPSYNTH_API tapsynth_status tapsynth_check_report(const char* report_json, char** out_violations_json);

#ifdef __cplusplus
}
#endif

#endif
