#ifndef DPSBP_WAVE_H
#define DPSBP_WAVE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum DpsbpStatus {
  DPSBP_STATUS_OK = 0,
  DPSBP_STATUS_NULL_POINTER = 1,
  DPSBP_STATUS_INVALID_ARGUMENT = 2,
  DPSBP_STATUS_PARSE = 3,
  DPSBP_STATUS_INVALID_CONFIG = 4,
  DPSBP_STATUS_NUMERICAL = 5,
  DPSBP_STATUS_IO = 6,
  DPSBP_STATUS_NOT_AVAILABLE = 7,
  DPSBP_STATUS_PANIC = 8,
} DpsbpStatus;

/**
 * Parsed and validated experiment configuration.
 */
typedef struct DpsbpConfig DpsbpConfig;

/**
 * Closed-form reference solution.
 */
typedef struct DpsbpExact DpsbpExact;

/**
 * Headline results of one run.
 */
typedef struct DpsbpSummary DpsbpSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *dpsbp_last_error(void);

void dpsbp_clear_error(void);

/**
 * Parses a JSON configuration into a new handle.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DpsbpStatus dpsbp_config_parse(const char *json, struct DpsbpConfig **out);

/**
 * # Safety
 * `cfg` must come from [`dpsbp_config_parse`] and not be used afterwards.
 */
void dpsbp_config_free(struct DpsbpConfig *cfg);

/**
 * Runs the configured experiment, writing its CSV files to `out_dir`.
 *
 * # Safety
 * `cfg` must be a live handle, `out_dir` a NUL-terminated path and `out` a
 * valid pointer.
 */
enum DpsbpStatus dpsbp_run(const struct DpsbpConfig *cfg,
                           const char *out_dir,
                           struct DpsbpSummary **out);

/**
 * Number of fitted rates (zero unless the run was a convergence study).
 *
 * # Safety
 * `s` must be a live handle or null.
 */
size_t dpsbp_summary_rate_count(const struct DpsbpSummary *s);

/**
 * Rate `index` and its flavor label (two characters plus NUL fit in `label`
 * when `label_len >= 3`; pass null to skip the label).
 *
 * # Safety
 * `s` must be a live handle, `rate` valid, `label` null or writable for `label_len` bytes.
 */
enum DpsbpStatus dpsbp_summary_rate(const struct DpsbpSummary *s,
                                    size_t index,
                                    double *rate,
                                    char *label,
                                    size_t label_len);

/**
 * Final error against the exact solution (forward runs) or the true
 * displacement (inversions).
 *
 * # Safety
 * `s` must be a live handle and `out` valid.
 */
enum DpsbpStatus dpsbp_summary_final_error(const struct DpsbpSummary *s, double *out);

/**
 * # Safety
 * `s` must come from [`dpsbp_run`] and not be used afterwards.
 */
void dpsbp_summary_free(struct DpsbpSummary *s);

/**
 * Reference solution for `f = Π cos(π x_a)`, `g = 0` on `[-1, 1]^dim`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DpsbpStatus dpsbp_exact_new(size_t dim, double c, double sigma, struct DpsbpExact **out);

/**
 * Evaluates at `x[0..dim]` and time `t`.
 *
 * # Safety
 * `ex` must be a live handle, `x` readable for `dim` values, `out` valid.
 */
enum DpsbpStatus dpsbp_exact_eval(const struct DpsbpExact *ex,
                                  const double *x,
                                  double t,
                                  double *out);

/**
 * # Safety
 * `ex` must come from [`dpsbp_exact_new`] and not be used afterwards.
 */
void dpsbp_exact_free(struct DpsbpExact *ex);

/**
 * Least-squares slope of `log(errors)` against `log(spacings)`.
 *
 * # Safety
 * `spacings` and `errors` must be readable for `n` values, `out` valid.
 */
enum DpsbpStatus dpsbp_convergence_rate(const double *spacings,
                                        const double *errors,
                                        size_t n,
                                        double *out);

/**
 * Certifies the operators of `order` on the standard sizes. `passed` is set
 * even when some check fails; the status is only non-zero for bad input.
 *
 * # Safety
 * `passed` must be a valid pointer.
 */
enum DpsbpStatus dpsbp_certify(size_t order, bool *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPSBP_WAVE_H */
