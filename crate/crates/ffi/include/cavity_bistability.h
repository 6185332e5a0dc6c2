#ifndef CAVITY_BISTABILITY_H
#define CAVITY_BISTABILITY_H

#pragma once

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define CB_SHIFT_FIGURE_CONVENTION 0

#define CB_SHIFT_AS_WRITTEN 1

#define CB_SCAN_INCREASING 0

#define CB_SCAN_DECREASING 1

typedef enum CbStatus {
  CB_STATUS_OK = 0,
  CB_STATUS_NULL_POINTER = 1,
  CB_STATUS_INVALID_ARGUMENT = 2,
  CB_STATUS_NUMERICAL = 3,
  CB_STATUS_BUFFER_TOO_SMALL = 4,
  CB_STATUS_PANIC = 5,
} CbStatus;

/*
 Dimensionless model plus the rates used for stability.
 */
typedef struct CbModel CbModel;

typedef struct CbScanTrace CbScanTrace;

typedef struct CbTrajectory CbTrajectory;

/*
 Laboratory parameters; angular frequencies in rad/s, SI units otherwise.
 */
typedef struct CbPhysicalParams {
  double kappa;
  double gamma;
  double g0;
  double delta_ca;
  double n_atoms;
  double i_sat;
  double enhancement_g;
  double pump_power;
  double waist;
  double intensity_calibration;
} CbPhysicalParams;

typedef struct CbFitResult {
  double a_est;
  double s_est;
  double residual_rms;
  bool converged;
  size_t iterations;
} CbFitResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the most recent failure on this thread; empty if none.

 The pointer stays valid until the next failing call on the same thread.
 */
const char *cb_last_error_message(void);

/*
 Default laboratory parameter set.
 */
struct CbPhysicalParams cb_physical_default(void);

/*
 Model with explicit A and S; stability uses the default rates.

 # Safety
 `out` must be valid for writes.
 */
enum CbStatus cb_model_new(double a, double s, int32_t shift, struct CbModel **out);

/*
 Model with A and S derived from laboratory parameters.

 # Safety
 `params` must point to a valid struct and `out` must be valid for writes.
 */
enum CbStatus cb_model_from_physical(const struct CbPhysicalParams *params,
                                     int32_t shift,
                                     struct CbModel **out);

/*
 # Safety
 `model` must be null or a handle from `cb_model_*` not yet freed.
 */
void cb_model_free(struct CbModel *model);

/*
 # Safety
 `model` must be a live handle; `a` and `s` must be valid for writes.
 */
enum CbStatus cb_model_params(const struct CbModel *model, double *a, double *s);

/*
 Steady intensities at one detuning (ascending) with stability flags.

 Writes up to `capacity` values; `count` receives the number of roots (1 or 3).

 # Safety
 `intensities` and `stable` must hold `capacity` elements; `count` must be valid for writes.
 */
enum CbStatus cb_steady_roots(const struct CbModel *model,
                              double detuning,
                              double *intensities,
                              bool *stable,
                              size_t capacity,
                              size_t *count);

/*
 Bistable interval inside [`search_lo`, `search_hi`]; `found` is false when there is none.

 # Safety
 `lower`, `upper` and `found` must be valid for writes.
 */
enum CbStatus cb_bistable_region(const struct CbModel *model,
                                 double search_lo,
                                 double search_hi,
                                 double *lower,
                                 double *upper,
                                 bool *found);

/*
 Hysteresis scan over `grid`, which must be ordered in `direction`.

 # Safety
 `grid` must hold `len` values; `out` must be valid for writes.
 */
enum CbStatus cb_scan(const struct CbModel *model,
                      const double *grid,
                      size_t len,
                      int32_t direction,
                      struct CbScanTrace **out);

/*
 Wraps measured samples; the direction follows from the detuning order.

 # Safety
 `detunings` and `intensities` must hold `len` values; `out` must be valid for writes.
 */
enum CbStatus cb_scan_from_samples(const double *detunings,
                                   const double *intensities,
                                   size_t len,
                                   struct CbScanTrace **out);

/*
 Number of samples; 0 for a null handle.

 # Safety
 `trace` must be null or a live handle.
 */
size_t cb_scan_len(const struct CbScanTrace *trace);

/*
 Copies the samples in scan order.

 # Safety
 `detunings` and `intensities` must hold `capacity` elements.
 */
enum CbStatus cb_scan_copy(const struct CbScanTrace *trace,
                           double *detunings,
                           double *intensities,
                           size_t capacity);

/*
 # Safety
 `trace` must be null or a handle not yet freed.
 */
void cb_scan_free(struct CbScanTrace *trace);

/*
 Fits A and S to an increasing and a decreasing trace on one grid.

 Bounds are `[a_lo, a_hi] x [s_lo, s_hi]`; stability uses the default rates.

 # Safety
 Both traces must be live handles and `out` valid for writes.
 */
enum CbStatus cb_fit(const struct CbScanTrace *increasing,
                     const struct CbScanTrace *decreasing,
                     double a_lo,
                     double a_hi,
                     double s_lo,
                     double s_hi,
                     int32_t shift,
                     struct CbFitResult *out);

/*
 Integrates a linear detuning chirp from the dark cavity.

 `fixed_step` selects the deterministic fixed-step integrator.

 # Safety
 `model` must be a live handle and `out` valid for writes.
 */
enum CbStatus cb_integrate_chirp(const struct CbModel *model,
                                 double start,
                                 double end,
                                 double duration_s,
                                 bool fixed_step,
                                 struct CbTrajectory **out);

/*
 Number of output samples; 0 for a null handle.

 # Safety
 `trajectory` must be null or a live handle.
 */
size_t cb_trajectory_len(const struct CbTrajectory *trajectory);

/*
 Copies time (s), detuning, |e|² and population fraction per sample.

 # Safety
 All four buffers must hold `capacity` elements.
 */
enum CbStatus cb_trajectory_copy(const struct CbTrajectory *trajectory,
                                 double *times,
                                 double *detunings,
                                 double *intensities,
                                 double *pop_fractions,
                                 size_t capacity);

/*
 # Safety
 `trajectory` must be null or a handle not yet freed.
 */
void cb_trajectory_free(struct CbTrajectory *trajectory);

/*
 Null-terminated crate version.
 */
const char *cb_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CAVITY_BISTABILITY_H */
