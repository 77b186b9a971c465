/* C interface to the aggregation library. All objects are opaque handles
 * created and released through this API. Every call returns a status code;
 * on failure distagg_last_error() gives the message (per thread).
 * Strings returned through char** are owned by the caller and released with
 * distagg_string_free. */
#ifndef DISTAGG_C_API_H
#define DISTAGG_C_API_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DISTAGG_API __declspec(dllexport)
#else
#define DISTAGG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  DISTAGG_OK = 0,
  DISTAGG_E_DATA = 1,     /* malformed or inconsistent input data */
  DISTAGG_E_METRIC = 2,   /* distance function failure */
  DISTAGG_E_CONFIG = 3,   /* bad method, key or value */
  DISTAGG_E_NUMERIC = 4,  /* optimizer or merge produced an unusable value */
  DISTAGG_E_ARGUMENT = 5, /* null handle or pointer */
  DISTAGG_E_INTERNAL = 6
} distagg_status;

typedef struct distagg_dataset distagg_dataset;
typedef struct distagg_config distagg_config;
typedef struct distagg_result distagg_result;

DISTAGG_API const char* distagg_version(void);
DISTAGG_API const char* distagg_last_error(void);
DISTAGG_API const char* distagg_status_name(distagg_status status);
DISTAGG_API void distagg_string_free(char* s);

/* ---- datasets ---------------------------------------------------------- */

/* task: category, number, vector, ranking, tokens, span, box, keypoint.
 * gold_path may be NULL. */
DISTAGG_API distagg_status distagg_dataset_load(const char* data_path, const char* task, const char* gold_path,
                                                distagg_dataset** out);
/* JSON-Lines text; gold_jsonl may be NULL. */
DISTAGG_API distagg_status distagg_dataset_parse(const char* data_jsonl, const char* task, const char* gold_jsonl,
                                                 distagg_dataset** out);
DISTAGG_API void distagg_dataset_free(distagg_dataset* dataset);
DISTAGG_API distagg_status distagg_dataset_info(const distagg_dataset* dataset, size_t* items, size_t* workers,
                                                size_t* annotations, size_t* gold_items);
/* gold_path may be NULL. */
DISTAGG_API distagg_status distagg_dataset_write(const distagg_dataset* dataset, const char* data_path,
                                                 const char* gold_path);

/* ---- configuration ----------------------------------------------------- */

/* Defaults: method mas, K 3, phi 0.25, psi 0.025, max_iter 1500, seed 0. */
DISTAGG_API distagg_status distagg_config_new(distagg_config** out);
DISTAGG_API void distagg_config_free(distagg_config* config);
/* key is "section.name", e.g. "run.method", "mas.K", "merge.statistic". */
DISTAGG_API distagg_status distagg_config_set(distagg_config* config, const char* key, const char* value);
/* Applies an INI file on top of the current values. */
DISTAGG_API distagg_status distagg_config_load(distagg_config* config, const char* ini_path);
DISTAGG_API distagg_status distagg_config_to_json(const distagg_config* config, char** out_json);
DISTAGG_API distagg_status distagg_method_names(char** out_json);

/* ---- aggregation ------------------------------------------------------- */

DISTAGG_API distagg_status distagg_aggregate(const distagg_dataset* dataset, const distagg_config* config,
                                             distagg_result** out);
DISTAGG_API void distagg_result_free(distagg_result* result);
/* Result as JSON, including the fitted parameters. */
DISTAGG_API distagg_status distagg_result_to_json(const distagg_result* result, char** out_json);
DISTAGG_API distagg_status distagg_result_from_json(const char* json_text, distagg_result** out);
/* item,label,worker,score,recipe,flags,error */
DISTAGG_API distagg_status distagg_result_to_csv(const distagg_result* result, char** out_csv);
DISTAGG_API distagg_status distagg_result_failed_items(const distagg_result* result, size_t* out);

/* Scores a result against the dataset's gold. metric may be NULL (task
 * default). out_json and mean may each be NULL. */
DISTAGG_API distagg_status distagg_evaluate(const distagg_result* result, const distagg_dataset* dataset,
                                            const char* metric, char** out_json, double* mean);

/* ---- metrics ----------------------------------------------------------- */

/* Distance between two labels given in their JSON wire encoding. */
DISTAGG_API distagg_status distagg_distance(const char* metric, const char* label_a_json, const char* label_b_json,
                                            double* out);
/* Label kind a metric works on ("category", "box", ...). The string is static. */
DISTAGG_API distagg_status distagg_metric_task(const char* metric, const char** out_task);
DISTAGG_API distagg_status distagg_krippendorff_alpha(const distagg_dataset* dataset, const char* metric,
                                                      double* out);

/* ---- simulation -------------------------------------------------------- */

/* task: binary, ranking, keypoints; preset: uniform, centered, easy_skew,
 * difficult_skew. The dataset carries gold for every item. truth_json may be
 * NULL. */
DISTAGG_API distagg_status distagg_simulate(const char* task, size_t n_items, size_t n_workers, double r,
                                            const char* preset, uint64_t seed, distagg_dataset** out,
                                            char** truth_json);

typedef void (*distagg_progress_fn)(size_t done, size_t total, void* user);

/* grid_ini may be NULL for the full default grid. progress may be NULL. */
DISTAGG_API distagg_status distagg_sweep(const char* grid_ini_path, unsigned threads, distagg_progress_fn progress,
                                         void* user, char** out_csv, size_t* failed_cells);

/* ---- diagnostics ------------------------------------------------------- */

/* fit_json is an aggregation result of method mas/smas (or its "fit"
 * member, or the bare embedding record). sim_truth_json may be NULL.
 * flags: bit 0 skips the paired scarcity simulations, bit 1 skips the
 * small-phi refit. */
DISTAGG_API distagg_status distagg_diagnose(const distagg_dataset* dataset, const char* metric, const char* fit_json,
                                            const char* sim_truth_json, unsigned flags, char** out_report_json,
                                            int* any_failed);

#ifdef __cplusplus
}
#endif

#endif
