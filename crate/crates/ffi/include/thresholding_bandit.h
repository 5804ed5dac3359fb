#ifndef THRESHOLDING_BANDIT_H
#define THRESHOLDING_BANDIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  TB_STATUS_OK = 0,
  TB_STATUS_NULL_POINTER = 1,
  TB_STATUS_INVALID_ARGUMENT = 2,
  TB_STATUS_DOMAIN = 3,
  TB_STATUS_BUDGET = 4,
  TB_STATUS_BUFFER_TOO_SMALL = 5,
  TB_STATUS_IO = 6,
  TB_STATUS_PANIC = 7,
} TbStatus;

typedef enum {
  TB_SETTING_NON_MONOTONIC = 0,
  TB_SETTING_INCREASING = 1,
  TB_SETTING_BELOW_THRESHOLD = 2,
} TbSetting;

/**
 * Validated experiment configuration.
 */
typedef struct TbExperiment TbExperiment;

/**
 * Bandit model: means, threshold and setting.
 */
typedef struct TbInstance TbInstance;

/**
 * Per-replication records and per-algorithm summaries of a finished experiment.
 */
typedef struct TbResult TbResult;

typedef struct {
  uint64_t replications;
  double mean_tau;
  double stderr_tau;
  double error_rate;
} TbSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the message of the last failed call on this thread (empty after a success).
 *
 * # Safety
 * `buf` must be valid for `cap` bytes or null; `needed` must be valid or null.
 */
TbStatus tb_last_error_message(char *buf, size_t cap, size_t *needed);

/**
 * NUL-terminated library version; static storage.
 */
const char *tb_version(void);

/**
 * `setting` is a [`TbSetting`] value.
 *
 * # Safety
 * `mu` must point to `k` doubles; `out` must be valid for writes.
 */
TbStatus tb_instance_new(const double *mu,
                         size_t k,
                         double threshold,
                         uint32_t setting,
                         TbInstance **out);

/**
 * # Safety
 * `inst` must come from [`tb_instance_new`] and not be used afterwards; null is a no-op.
 */
void tb_instance_free(TbInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle; `k` valid for writes.
 */
TbStatus tb_instance_arms(const TbInstance *inst, size_t *k);

/**
 * Index (from 0) of the arm to identify; `tied` receives the number of arms sharing
 * the minimal distance.
 *
 * # Safety
 * `inst` must be a live handle; `arm` and `tied` valid for writes (`tied` may be null).
 */
TbStatus tb_optimal_arm(const TbInstance *inst, size_t *arm, size_t *tied);

/**
 * Optimal weights (`k` doubles) and characteristic time (infinite on ties).
 *
 * # Safety
 * `inst` must be a live handle; `weights` valid for `k` doubles; `t_star` valid or null.
 */
TbStatus tb_solve_complexity(const TbInstance *inst, double *weights, size_t k, double *t_star);

/**
 * Gap-based lower and upper bounds on the increasing-case characteristic time.
 *
 * # Safety
 * `inst` must be a live handle; `lower` and `upper` valid for writes.
 */
TbStatus tb_time_bounds(const TbInstance *inst, double *lower, double *upper);

/**
 * Parses and validates a JSON experiment configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` valid for writes.
 */
TbStatus tb_experiment_from_json(const char *json, TbExperiment **out);

/**
 * # Safety
 * `exp` must come from [`tb_experiment_from_json`]; null is a no-op.
 */
void tb_experiment_free(TbExperiment *exp);

/**
 * Runs every replication; blocks until done.
 *
 * # Safety
 * `exp` must be a live handle; `out` valid for writes.
 */
TbStatus tb_experiment_run(const TbExperiment *exp, TbResult **out);

/**
 * # Safety
 * `res` must come from [`tb_experiment_run`]; null is a no-op.
 */
void tb_result_free(TbResult *res);

/**
 * Number of summaries, one per configured algorithm.
 *
 * # Safety
 * `res` must be a live handle; `count` valid for writes.
 */
TbStatus tb_result_summary_count(const TbResult *res, size_t *count);

/**
 * # Safety
 * `res` must be a live handle; `out` valid for writes.
 */
TbStatus tb_result_summary(const TbResult *res, size_t index, TbSummary *out);

/**
 * Summary CSV (or the per-replication records when `raw` is true) as a NUL-terminated
 * string. With a null or short buffer, `needed` still receives the required size and
 * the call returns `BufferTooSmall`.
 *
 * # Safety
 * `res` must be a live handle; `buf` valid for `cap` bytes or null; `needed` valid or null.
 */
TbStatus tb_result_csv(const TbResult *res, bool raw, char *buf, size_t cap, size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THRESHOLDING_BANDIT_H */
