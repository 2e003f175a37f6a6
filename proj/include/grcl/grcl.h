/*
 * C interface to the GRCL engine: continual domain adaptation with
 * gradient-regularized contrastive learning.
 *
 * All functions return a grcl_status. On failure, grcl_last_error() returns a
 * message describing the most recent error on the calling thread; the pointer
 * stays valid until the next call into the library from that thread.
 *
 * Handles are opaque and must be released with the matching *_free function.
 */
#ifndef GRCL_GRCL_H
#define GRCL_GRCL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(GRCL_BUILDING_LIBRARY)
#    define GRCL_API __declspec(dllexport)
#  else
#    define GRCL_API __declspec(dllimport)
#  endif
#else
#  define GRCL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum grcl_status {
  GRCL_OK = 0,
  GRCL_ERR_INVALID_ARGUMENT = 1, /* null pointer, bad index */
  GRCL_ERR_CONFIG = 2,           /* config failed to parse or validate */
  GRCL_ERR_DIMENSION = 3,
  GRCL_ERR_DEGENERATE_INPUT = 4,
  GRCL_ERR_CONTRACT = 5,
  GRCL_ERR_MISSING_ENTRY = 6,
  GRCL_ERR_INSUFFICIENT_NEGATIVES = 7,
  GRCL_ERR_NUMERIC = 8,
  GRCL_ERR_IO = 9,
  GRCL_ERR_INTERNAL = 10
} grcl_status;

typedef enum grcl_case {
  GRCL_CASE_INTERIOR = 0,
  GRCL_CASE_SOURCE_ACTIVE = 1,
  GRCL_CASE_MEMORY_ACTIVE = 2,
  GRCL_CASE_BOTH_ACTIVE = 3
} grcl_case;

typedef struct grcl_config_s* grcl_config_t;
typedef struct grcl_result_s* grcl_result_t;

GRCL_API const char* grcl_version(void);
GRCL_API const char* grcl_last_error(void);
GRCL_API const char* grcl_status_name(grcl_status status);

/* ---- configuration ---------------------------------------------------- */

GRCL_API grcl_status grcl_config_load(const char* path, grcl_config_t* out);
GRCL_API grcl_status grcl_config_parse(const char* json_text, grcl_config_t* out);
/* Fully resolved config as JSON; owned by the handle. */
GRCL_API grcl_status grcl_config_json(grcl_config_t cfg, const char** out);
GRCL_API grcl_status grcl_config_set_seed(grcl_config_t cfg, uint64_t seed);
/* Output directory after the GRCL_OUTPUT_DIR override; owned by the handle. */
GRCL_API grcl_status grcl_config_output_dir(grcl_config_t cfg, const char** out);
GRCL_API void grcl_config_free(grcl_config_t cfg);

/* ---- runs --------------------------------------------------------------- */

GRCL_API grcl_status grcl_run(grcl_config_t cfg, grcl_result_t* out);
GRCL_API grcl_status grcl_result_write(grcl_result_t result, const char* out_dir);
/* has_bwt is set to 0 when BWT is undefined (one target domain). */
GRCL_API grcl_status grcl_result_metrics(grcl_result_t result, double* acc, double* acc_mean,
                                         double* bwt, int* has_bwt);
GRCL_API grcl_status grcl_result_num_targets(grcl_result_t result, size_t* out);
/* R[t][j]; GRCL_ERR_INVALID_ARGUMENT for entries that were never evaluated. */
GRCL_API grcl_status grcl_result_accuracy(grcl_result_t result, size_t t, size_t j, double* out);
GRCL_API grcl_status grcl_result_constraints(grcl_result_t result, size_t* checks,
                                             size_t* violations);
/* metrics.json content; owned by the handle. */
GRCL_API grcl_status grcl_result_metrics_json(grcl_result_t result, const char** out);
GRCL_API void grcl_result_free(grcl_result_t result);

/* Runs every config over its seeds and writes the comparison CSV. */
GRCL_API grcl_status grcl_compare(const grcl_config_t* configs, size_t count, const char* out_csv);

/* ---- data ----------------------------------------------------------------- */

GRCL_API grcl_status grcl_generate_preset(const char* preset, uint64_t seed, const char* out_csv);

/* ---- projection ------------------------------------------------------------ */

/* Projects g_t onto {w : <w, g_s> >= 0, <w, g_dm> >= 0}. All vectors have
 * length p; w_out receives p values and u_out two multipliers, with
 * w = g_t + u_1 g_s + u_2 g_dm. case_out may be null. */
GRCL_API grcl_status grcl_project_two(const double* g_t, const double* g_s, const double* g_dm,
                                      size_t p, double* w_out, double* u_out, grcl_case* case_out);

/* Same projection for n constraints stored row-major in `constraints` (n x p);
 * u_out receives n multipliers and may be null. */
GRCL_API grcl_status grcl_project_n(const double* g_t, const double* constraints, size_t n,
                                    size_t p, double* w_out, double* u_out);

/* ---- checkpoints ------------------------------------------------------------ */

/* Accuracy of a saved model on every test split of a dataset CSV, written
 * to acc_out (capacity entries; the domain count goes to count_out). */
GRCL_API grcl_status grcl_evaluate_checkpoint(const char* checkpoint_path,
                                              const char* dataset_csv, double* acc_out,
                                              size_t capacity, size_t* count_out);

#ifdef __cplusplus
}
#endif

#endif /* GRCL_GRCL_H */
