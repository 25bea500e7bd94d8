#ifndef LIFEBOOT_H
#define LIFEBOOT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes; the nonzero values match the CLI exit codes where they
 * overlap.
 */
typedef enum LbStatus {
  LB_STATUS_OK = 0,
  /**
   * A required pointer was null or a buffer too small.
   */
  LB_STATUS_NULL_OR_BUFFER = 1,
  LB_STATUS_INPUT = 2,
  LB_STATUS_NUMERIC = 3,
  LB_STATUS_PATHOLOGY = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  LB_STATUS_INTERNAL = 5,
} LbStatus;

typedef enum LbFamily {
  LB_FAMILY_WEIBULL = 0,
  LB_FAMILY_LOGNORMAL = 1,
  LB_FAMILY_GEN_GAMMA = 2,
} LbFamily;

typedef enum LbScheme {
  LB_SCHEME_MULTINOMIAL = 0,
  LB_SCHEME_DIRICHLET = 1,
  LB_SCHEME_EXPONENTIAL = 2,
} LbScheme;

typedef enum LbKind {
  LB_KIND_EXACT = 0,
  LB_KIND_RIGHT = 1,
  LB_KIND_LEFT = 2,
  LB_KIND_INTERVAL = 3,
} LbKind;

/**
 * Life data.
 */
typedef struct LbDataset LbDataset;

/**
 * A maximum-likelihood fit.
 */
typedef struct LbFit LbFit;

/**
 * A bootstrap run.
 */
typedef struct LbRun LbRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, as
 * "CODE: text". Never null.
 */
const char *lb_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *lb_version(void);

/**
 * Builds a dataset from parallel arrays of length `n`; `kind` holds
 * `LbKind` codes. `time2` (interval upper ends) and `trunc_lower` may be
 * null; NaN entries mean "absent". `count` may be null (all ones).
 *
 * # Safety
 * Non-null array pointers must reference `n` readable elements; `out` must
 * be writable.
 */
enum LbStatus lb_dataset_new(const double *time,
                             const double *time2,
                             const int32_t *kind,
                             const double *trunc_lower,
                             const uint32_t *count,
                             size_t n,
                             struct LbDataset **out);

/**
 * Reads a life-data CSV file (`rocket_motor` names the bundled data).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum LbStatus lb_dataset_from_csv_path(const char *path, struct LbDataset **out);

/**
 * Parses life-data CSV text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum LbStatus lb_dataset_from_csv_text(const char *text, struct LbDataset **out);

/**
 * Number of records (rows, not units).
 *
 * # Safety
 * `ds` must be null or a live dataset handle.
 */
size_t lb_dataset_len(const struct LbDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void lb_dataset_free(struct LbDataset *ds);

/**
 * Maximum-likelihood fit of the `LbFamily` code `family`. `weights` may be null (unit weights); otherwise
 * it holds one weight per record.
 *
 * # Safety
 * `ds` must be a live handle; `weights` must reference `n_weights` values;
 * `out` must be writable.
 */
enum LbStatus lb_fit(const struct LbDataset *ds,
                     int32_t family,
                     const double *weights,
                     size_t n_weights,
                     struct LbFit **out);

/**
 * Number of parameters of the fitted family (2 or 3).
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t lb_fit_n_params(const struct LbFit *fit);

/**
 * Copies estimates to `params` and standard errors (NaN where unavailable)
 * to `se`; either pointer may be null. Buffers need `lb_fit_n_params` slots.
 *
 * # Safety
 * `fit` must be a live handle; non-null buffers must hold `cap` values.
 */
enum LbStatus lb_fit_params(const struct LbFit *fit, double *params, double *se, size_t cap);

/**
 * Maximized loglikelihood.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double lb_fit_loglik(const struct LbFit *fit);

/**
 * Wald interval for parameter `index` at `level`.
 *
 * # Safety
 * `fit` must be a live handle; `lower` and `upper` must be writable.
 */
enum LbStatus lb_fit_wald(const struct LbFit *fit,
                          size_t index,
                          double level,
                          double *lower,
                          double *upper);

/**
 * # Safety
 * `fit` must be null or a handle not yet freed.
 */
void lb_fit_free(struct LbFit *fit);

/**
 * Runs `b` bootstrap replicates (`family`, `scheme` are `LbFamily`,
 * `LbScheme` codes). With `strict`, returns
 * `LB_STATUS_PATHOLOGY` when more than 5% of replicates are pathological.
 *
 * # Safety
 * `ds` must be a live handle; `out` must be writable.
 */
enum LbStatus lb_bootstrap(const struct LbDataset *ds,
                           int32_t family,
                           int32_t scheme,
                           size_t b,
                           uint64_t seed,
                           bool unit_level,
                           bool strict,
                           struct LbRun **out);

/**
 * Replicates that enter interval computations.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
size_t lb_run_usable(const struct LbRun *run);

/**
 * Copies the B draws of parameter `index` in replicate order; excluded
 * replicates are NaN.
 *
 * # Safety
 * `run` must be a live handle; `out` must hold `cap` values.
 */
enum LbStatus lb_run_draws(const struct LbRun *run, size_t index, double *out, size_t cap);

/**
 * Bootstrap interval for parameter `index`: bias-corrected percentile when
 * `bias_corrected`, simple percentile otherwise.
 *
 * # Safety
 * `run` must be a live handle; `lower` and `upper` must be writable.
 */
enum LbStatus lb_run_interval(const struct LbRun *run,
                              size_t index,
                              double level,
                              bool bias_corrected,
                              double *lower,
                              double *upper);

/**
 * # Safety
 * `run` must be null or a handle not yet freed.
 */
void lb_run_free(struct LbRun *run);

/**
 * Fills `out[0..n]` with replicate `replicate` (1-based) of the weight
 * stream for `seed`.
 *
 * # Safety
 * `out` must hold `n` values.
 */
enum LbStatus lb_gen_weights(int32_t scheme,
                             size_t n,
                             uint64_t seed,
                             uint64_t replicate,
                             double *out);

/**
 * Probability that a row resample of `n` rows with `r` failures keeps
 * fewer than two failures.
 *
 * # Safety
 * `out` must be writable.
 */
enum LbStatus lb_prob_degenerate_resample(uint64_t n, uint64_t r, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIFEBOOT_H */
