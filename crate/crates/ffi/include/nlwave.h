#ifndef NLWAVE_H
#define NLWAVE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NlwStatus {
  NLW_STATUS_OK = 0,
  NLW_STATUS_NULL_POINTER = 1,
  NLW_STATUS_INVALID_ARGUMENT = 2,
  NLW_STATUS_INVALID_MODEL = 3,
  /**
   * Blow-up, non-finite values, step limit or under-resolution. Outputs
   * hold the last good state where the function documents it.
   */
  NLW_STATUS_NUMERICAL = 4,
  NLW_STATUS_CLASSIFICATION_FAILED = 5,
  NLW_STATUS_PANIC = 6,
} NlwStatus;

typedef struct NlwGrid NlwGrid;

typedef struct NlwKernel NlwKernel;

typedef struct NlwModel NlwModel;

typedef struct NlwRunReport {
  double t_reached;
  double dt;
  uint64_t steps;
  double mass_drift;
} NlwRunReport;

typedef struct NlwClassification {
  double nu_estimate;
  double fit_residual;
} NlwClassification;

typedef struct NlwFrameParams {
  double a;
  double b;
  double c;
} NlwFrameParams;

typedef struct NlwSolitonReport {
  double speed;
  double t_end;
  double initial_residual;
  double shape_error;
  double phase_error;
  double mass_drift;
} NlwSolitonReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (nul-terminated,
 * truncated to `len`). Returns the full message length, 0 if none.
 */
size_t nlw_last_error(char *buf, size_t len);

/**
 * Library version as a static nul-terminated string.
 */
const char *nlw_version(void);

enum NlwStatus nlw_grid_new(size_t n_points, double length, struct NlwGrid **grid_out);

void nlw_grid_free(struct NlwGrid *grid);

/**
 * Returns 0 for a null handle.
 */
size_t nlw_grid_n_points(const struct NlwGrid *grid);

/**
 * Writes the `n_points` node positions.
 */
enum NlwStatus nlw_grid_nodes(const struct NlwGrid *grid, double *nodes_out);

/**
 * `name` is a family such as `ch`, `bbm`, `kdv`, `ibq`, `nonlocal` or a
 * fractional family with its order, e.g. `fch:1.5`. Models are in the
 * original frame with dealiasing on.
 */
enum NlwStatus nlw_model_new(const struct NlwGrid *grid,
                             const char *name,
                             struct NlwModel **model_out);

/**
 * The nonlocal parent with the given kernel.
 */
enum NlwStatus nlw_model_new_nonlocal(const struct NlwGrid *grid,
                                      const struct NlwKernel *kernel,
                                      struct NlwModel **model_out);

void nlw_model_free(struct NlwModel *model);

/**
 * 2 for second-order parents (`u`, `u_t`), 1 otherwise; 0 for null.
 */
size_t nlw_model_components(const struct NlwModel *model);

/**
 * Linear frequency ω(ξ).
 */
enum NlwStatus nlw_model_frequency(const struct NlwModel *model, double xi, double *omega_out);

/**
 * Time derivative of the state. `w`/`dw_out` are the `u_t` component and are
 * only read/written for two-component models (pass null otherwise).
 */
enum NlwStatus nlw_model_rhs(const struct NlwModel *model,
                             const double *u,
                             const double *w,
                             double *du_out,
                             double *dw_out);

/**
 * Integrates in place from `t = 0` to `t_end` with RK4. `step > 0` is a
 * fixed step, `step < 0` a CFL number `-step`. On `Numerical` failure the
 * arrays hold the last good state and `report` says how far it got.
 */
enum NlwStatus nlw_integrate(const struct NlwModel *model,
                             double *u,
                             double *w,
                             double t_end,
                             double step,
                             struct NlwRunReport *report);

/**
 * `(-d²/dx²)^ν` applied to `n_points` samples.
 */
enum NlwStatus nlw_fractional_laplacian(const struct NlwGrid *grid,
                                        double nu,
                                        const double *input,
                                        double *output);

/**
 * β̂(ξ) = 1/(1 + ξ²).
 */
enum NlwStatus nlw_kernel_exponential(struct NlwKernel **kernel_out);

/**
 * β̂(ξ) = 1/(1 + |ξ|^{2ν}), ν ≥ 1.
 */
enum NlwStatus nlw_kernel_fractional(double nu, struct NlwKernel **kernel_out);

/**
 * Kernel from `len` samples (ξ_i, β̂_i), ξ ascending from 0.
 */
enum NlwStatus nlw_kernel_tabulated(const double *xi,
                                    const double *values,
                                    size_t len,
                                    struct NlwKernel **kernel_out);

void nlw_kernel_free(struct NlwKernel *kernel);

enum NlwStatus nlw_kernel_symbol(const struct NlwKernel *kernel, double xi, double *value_out);

/**
 * Estimates ν from the small-ξ behaviour. On `ClassificationFailed` the
 * result still carries the estimate and fit residual.
 */
enum NlwStatus nlw_kernel_classify(const struct NlwKernel *kernel,
                                   double xi_max,
                                   struct NlwClassification *result_out);

/**
 * Coefficients of the moving frame `X = aY + bS`, `T = cS`.
 */
enum NlwStatus nlw_frame_params(double nu, struct NlwFrameParams *params_out);

/**
 * KdV soliton of the given amplitude carried once around a periodic domain
 * with RK4 at CFL number `cfl`.
 */
enum NlwStatus nlw_soliton_benchmark(double amplitude,
                                     size_t n_points,
                                     double length,
                                     double cfl,
                                     struct NlwSolitonReport *report_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLWAVE_H */
