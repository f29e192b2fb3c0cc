/* C interface to the membrane equilibrium solver. */
#ifndef MEA_MEA_H
#define MEA_MEA_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MEA_API __declspec(dllexport)
#else
#define MEA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mea_status {
    MEA_OK = 0,
    MEA_ERR_CONFIG = 1,     /* invalid configuration or arguments */
    MEA_ERR_DIVERGED = 2,   /* training or evaluation produced non-finite values */
    MEA_ERR_ACCEPTANCE = 3, /* a verification check failed its tolerance */
    MEA_ERR_IO = 4,
    MEA_ERR_INTERNAL = 5
} mea_status;

typedef struct mea_config mea_config;
typedef struct mea_run mea_run;

/* Message for the most recent failure on the calling thread. */
MEA_API const char* mea_last_error(void);
MEA_API const char* mea_version(void);

/* Strings returned through char** out-parameters are owned by the caller. */
MEA_API void mea_string_free(char* s);

MEA_API mea_status mea_config_load(const char* path, mea_config** out);
MEA_API mea_status mea_config_parse(const char* text, mea_config** out);
/* Built-in cases: "rectangle", "three_leg", "four_leg". */
MEA_API mea_status mea_config_preset(const char* name, mea_config** out);
/* Overrides one key and re-validates the whole configuration. */
MEA_API mea_status mea_config_set(mea_config* cfg, const char* section, const char* key, const char* value);
MEA_API mea_status mea_config_serialize(const mea_config* cfg, char** out);
MEA_API void mea_config_free(mea_config* cfg);

typedef void (*mea_progress_fn)(int epoch, const char* stage, double total_loss, double val_pde_rmse, void* user);

/* Trains a PINN and writes logs, model, report and exports to the output
 * directory. On divergence *out still receives the last good model and the
 * call returns MEA_ERR_DIVERGED. */
MEA_API mea_status mea_solve(const mea_config* cfg, mea_progress_fn progress, void* user, mea_run** out);
MEA_API mea_status mea_run_report(const mea_run* run, char** json);
MEA_API const char* mea_run_output_directory(const mea_run* run);
MEA_API void mea_run_free(mea_run* run);

/* Builds the configured reference (FD grid or manufactured case) and writes
 * it to the output directory; *json receives a summary. */
MEA_API mea_status mea_reference(const mea_config* cfg, char** json);

/* Admissibility of the configured stress field. A failed verdict is not an
 * error: the call returns MEA_OK with *pass = 0. */
MEA_API mea_status mea_check(const mea_config* cfg, size_t n_samples, uint64_t seed, int* pass, char** json);

/* Compares two x1,x2,f CSV files sampled on the same points. The second file
 * is the reference. */
MEA_API mea_status mea_compare_csv(const char* candidate_csv, const char* reference_csv, char** json);

/* what: "surface", "residual", "principal" or "points"; format: "csv" or
 * "obj" (surface only). model_path may be NULL for "principal" and "points". */
MEA_API mea_status mea_export(const mea_config* cfg, const char* model_path, const char* what, const char* format,
                              int resolution, const char* out_path);

typedef void (*mea_line_fn)(const char* line, void* user);

/* Runs a verification suite ("quick", "autodiff", "optimizer", "lifts",
 * "admissibility", "reference", "manufactured", "rectangle", "acceptance").
 * Each check reports one line through `line`; training progress goes to
 * `progress` (either may be NULL). Returns MEA_ERR_ACCEPTANCE if any check
 * fails. */
MEA_API mea_status mea_verify(const char* suite, int full_budget, mea_line_fn line, mea_line_fn progress, void* user,
                              char** json);

#ifdef __cplusplus
}
#endif

#endif
