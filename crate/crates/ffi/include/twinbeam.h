#ifndef TWINBEAM_H
#define TWINBEAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define TB_MODE_PROBE 0

#define TB_MODE_CONJUGATE 1

#define TB_MODE_SHOT_NOISE 2

#define TB_QUADRATURE_X 0

#define TB_QUADRATURE_Y 1

typedef enum {
  TB_STATUS_OK = 0,
  TB_STATUS_NULL_POINTER = 1,
  TB_STATUS_INVALID_ARGUMENT = 2,
  TB_STATUS_UNPHYSICAL = 3,
  TB_STATUS_OUT_OF_GRID = 4,
  TB_STATUS_IO = 5,
  TB_STATUS_FORMAT = 6,
  TB_STATUS_PANIC = 7,
  TB_STATUS_INTERNAL = 8,
} TbStatus;

/**
 * Two-mode quadrature covariance matrix.
 */
typedef struct TbCovariance TbCovariance;

/**
 * Medium response (amplitude, KK phase, group delay) on a frequency grid.
 */
typedef struct TbMedium TbMedium;

/**
 * One sampled quadrature trace.
 */
typedef struct TbTrace TbTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null if none.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *tb_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *tb_version(void);

/**
 * Validated covariance from 16 row-major entries.
 *
 * # Safety
 * `entries` must point to 16 readable doubles; `out` must be writable.
 */
TbStatus tb_covariance_new(const double *entries, TbCovariance **out);

/**
 * Two-mode squeezed vacuum with squeezing parameter `r`.
 *
 * # Safety
 * `out` must be writable.
 */
TbStatus tb_covariance_epr(double r, TbCovariance **out);

/**
 * New covariance after amplifying `mode` with phase-insensitive gain `gain`.
 *
 * # Safety
 * `cov` must be a live handle; `out` must be writable.
 */
TbStatus tb_covariance_apply_gain(const TbCovariance *cov,
                                  double gain,
                                  uint32_t mode,
                                  TbCovariance **out);

/**
 * Copies the 16 row-major entries into `out`.
 *
 * # Safety
 * `cov` must be a live handle; `out` must have room for 16 doubles.
 */
TbStatus tb_covariance_entries(const TbCovariance *cov, double *out);

/**
 * # Safety
 * `cov` must be null or a handle not yet freed.
 */
void tb_covariance_free(TbCovariance *cov);

/**
 * `Var(X_p - X_c) + Var(Y_p + Y_c)`; below 2 certifies entanglement.
 *
 * # Safety
 * `cov` must be a live handle; `out` must be writable.
 */
TbStatus tb_covariance_inseparability(const TbCovariance *cov, double *out);

/**
 * Quantum mutual information in bits.
 *
 * # Safety
 * `cov` must be a live handle; `out` must be writable.
 */
TbStatus tb_covariance_mutual_information(const TbCovariance *cov, double *out);

/**
 * Both symplectic eigenvalues, ascending.
 *
 * # Safety
 * `cov` must be a live handle; `out` must have room for 2 doubles.
 */
TbStatus tb_covariance_symplectic_eigenvalues(const TbCovariance *cov, double *out);

/**
 * Closed-form inseparability of an EPR pair with one beam amplified by `gain`.
 *
 * # Safety
 * `out` must be writable.
 */
TbStatus tb_inseparability_closed_form(double r, double gain, double *out);

/**
 * Gain at which the closed-form inseparability reaches 2.
 *
 * # Safety
 * `out` must be writable.
 */
TbStatus tb_entanglement_breaking_gain(double r, double *out);

/**
 * Medium built from `n_lines` Lorentzian gain lines on the grid
 * `start_hz + i·step_hz`, `i < grid_len`, with KK-derived phase.
 *
 * # Safety
 * `centers_hz`, `widths_hz` and `peaks` must each hold `n_lines` doubles;
 * `out` must be writable.
 */
TbStatus tb_medium_from_lines(const double *centers_hz,
                              const double *widths_hz,
                              const double *peaks,
                              size_t n_lines,
                              double start_hz,
                              double step_hz,
                              size_t grid_len,
                              TbMedium **out);

/**
 * Medium from a sampled power-gain profile on a uniform grid, with
 * KK-derived phase.
 *
 * # Safety
 * `freq_hz` and `gain` must each hold `len` doubles; `out` must be writable.
 */
TbStatus tb_medium_from_gain(const double *freq_hz, const double *gain, size_t len, TbMedium **out);

/**
 * Gain-weighted mean group delay in seconds over `[lo_hz, hi_hz]`.
 * Negative values are advances.
 *
 * # Safety
 * `medium` must be a live handle; `out` must be writable.
 */
TbStatus tb_medium_group_delay_in_band(const TbMedium *medium,
                                       double lo_hz,
                                       double hi_hz,
                                       double *out);

/**
 * Interpolated amplitude, phase (rad) and noise coupling at `freq_hz`.
 *
 * # Safety
 * `medium` must be a live handle; the three output pointers must be writable.
 */
TbStatus tb_medium_transfer_at(const TbMedium *medium,
                               double freq_hz,
                               double *amplitude,
                               double *phase,
                               double *noise_coupling);

/**
 * # Safety
 * `medium` must be null or a handle not yet freed.
 */
void tb_medium_free(TbMedium *medium);

/**
 * Trace from `len` samples. `mode` is one of `TB_MODE_*`, `quadrature` one
 * of `TB_QUADRATURE_*`.
 *
 * # Safety
 * `samples` must hold `len` doubles; `out` must be writable.
 */
TbStatus tb_trace_new(const double *samples,
                      size_t len,
                      double sample_period_s,
                      uint32_t mode,
                      uint32_t quadrature,
                      uint64_t seed_tag,
                      TbTrace **out);

/**
 * Reads a `.tbtr` trace file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
TbStatus tb_trace_read(const char *path, TbTrace **out);

/**
 * Writes the trace atomically to `path`.
 *
 * # Safety
 * `trace` must be a live handle; `path` must be a NUL-terminated string.
 */
TbStatus tb_trace_write(const TbTrace *trace, const char *path);

/**
 * Borrowed view of the samples. The pointer is valid until the handle is
 * freed.
 *
 * # Safety
 * `trace` must be a live handle; `samples` and `len` must be writable.
 */
TbStatus tb_trace_samples(const TbTrace *trace, const double **samples, size_t *len);

/**
 * Sample period, mode code and quadrature code of the trace.
 *
 * # Safety
 * `trace` must be a live handle; the output pointers must be writable.
 */
TbStatus tb_trace_info(const TbTrace *trace,
                       double *sample_period_s,
                       uint32_t *mode,
                       uint32_t *quadrature);

/**
 * # Safety
 * `trace` must be null or a handle not yet freed.
 */
void tb_trace_free(TbTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TWINBEAM_H */
