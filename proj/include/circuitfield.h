/*
 * circuitfield — placement congestion prediction from raw node geometry.
 *
 * C API over the C++ core. All functions return cf_status; on failure the
 * message is available via cf_last_error() (thread-local). Objects returned
 * through out-parameters are owned by the caller and released with the
 * matching *_free function. Status values double as CLI exit codes.
 */
#ifndef CIRCUITFIELD_H
#define CIRCUITFIELD_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum cf_status {
  CF_OK = 0,
  CF_ERROR_INTERNAL = 1,
  CF_ERROR_CONFIG = 2,
  CF_ERROR_DATA = 3,
  CF_ERROR_COMPAT = 4
} cf_status;

typedef struct cf_nodeset cf_nodeset; /* raw placement point cloud */
typedef struct cf_grid cf_grid;       /* W x H raster of values in [0,1] */
typedef struct cf_model cf_model;     /* trained model + weight table */

const char* cf_version(void);
/* Message from the most recent failing call on this thread ("" if none). */
const char* cf_last_error(void);

/* 0 = error .. 3 = debug; also settable via the CF_LOG env variable. */
void cf_set_log_level(int level);
/* Worker threads for training/eval; n <= 0 restores the hardware default. */
void cf_set_threads(int n);

/* ---- node files (.csv / .jsonl) ---- */
cf_status cf_nodeset_read(const char* path, cf_nodeset** out);
cf_status cf_nodeset_write(const cf_nodeset* nodes, const char* path);
int64_t cf_nodeset_size(const cf_nodeset* nodes);
void cf_nodeset_free(cf_nodeset* nodes);

/* ---- grids (.cfg1 binary / .txt text / .pgm heatmap export) ---- */
cf_status cf_grid_read(const char* path, cf_grid** out);
/* strict = nonzero rejects values outside [0,1] instead of clamping. */
cf_status cf_grid_write(const cf_grid* grid, const char* path, int strict);
int64_t cf_grid_width(const cf_grid* grid);
int64_t cf_grid_height(const cf_grid* grid);
/* Row-major W*H values, valid until the grid is freed. */
const double* cf_grid_values(const cf_grid* grid);
void cf_grid_free(cf_grid* grid);

/* ---- synthetic circuits ---- */
cf_status cf_synthetic(uint64_t seed, int64_t n_nodes, int64_t n_clusters, int64_t width, int64_t height,
                       cf_nodeset** nodes_out, cf_grid** label_out);

/* ---- training ---- */
typedef struct cf_train_opts {
  const char* resume_path;         /* NULL: fresh run */
  const char* precision_override;  /* NULL, "f32" or "f64" */
  int64_t seed_override;           /* used when has_seed_override != 0 */
  int has_seed_override;
  int64_t max_epochs;              /* run at most this many epochs now (resumable); 0 = no limit */
} cf_train_opts;

/* Trains per the JSON config over the paired node/label files in data_dir
 * and writes model.cfck (best validation), last.cfck and history.json into
 * out_dir. */
cf_status cf_train(const char* config_json, const char* data_dir, const char* out_dir,
                   const cf_train_opts* opts);
/* Validates the config and reports the model parameter count. */
cf_status cf_dry_run(const char* config_json, int64_t* param_count_out);

/* ---- inference ---- */
cf_status cf_model_load(const char* path, cf_model** out);
cf_status cf_model_resolution(const cf_model* model, int64_t* w, int64_t* h);
cf_status cf_model_predict(cf_model* model, const cf_nodeset* nodes, cf_grid** out);
void cf_model_free(cf_model* model);

/* ---- evaluation ---- */
/* Pairs prediction/label grid files by basename, computes Pearson, Spearman
 * and Kendall tau-b per sample (or pooled over all cells) and returns the
 * JSON report and an aligned text table. Free both with cf_string_free. */
cf_status cf_eval_dirs(const char* pred_dir, const char* label_dir, int pooled, char** json_out,
                       char** table_out);
void cf_string_free(char* s);

/* ---- hand-crafted baseline rasters ---- */
cf_status cf_density_map(const cf_nodeset* nodes, int64_t width, int64_t height, cf_grid** out);
/* nets_path: JSONL, one {"net": id, "nodes": [ids]} per line. */
cf_status cf_rudy_map(const cf_nodeset* nodes, const char* nets_path, int64_t width, int64_t height,
                      cf_grid** out);

/* ---- verification ---- */
/* module: all | tensor | encoder | decoder | loss. Returns CF_OK only if
 * every gradient check passes at tolerance tol. */
cf_status cf_gradcheck(const char* module, double tol, char** report_out);

#ifdef __cplusplus
}
#endif

#endif /* CIRCUITFIELD_H */
