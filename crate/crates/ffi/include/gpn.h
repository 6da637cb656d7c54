#ifndef GPN_H
#define GPN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum GpnLoss {
  GPN_LOSS_LOCATION_ABS = 0,
  GPN_LOSS_LOCATION_SQUARED = 1,
  GPN_LOSS_SCALE_ABS = 2,
  GPN_LOSS_SCALE_SQUARED = 3,
} GpnLoss;

typedef enum GpnProblemKind {
  GPN_PROBLEM_KIND_LOCATION = 0,
  GPN_PROBLEM_KIND_SCALE = 1,
} GpnProblemKind;

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum GpnStatus {
  GPN_STATUS_OK = 0,
  GPN_STATUS_NULL_POINTER = 1,
  GPN_STATUS_INVALID_UTF8 = 2,
  GPN_STATUS_DOMAIN = 3,
  GPN_STATUS_CONVERGENCE = 4,
  GPN_STATUS_KIND_MISMATCH = 5,
  GPN_STATUS_UNSUPPORTED = 6,
  GPN_STATUS_UNKNOWN_ESTIMATOR = 7,
  GPN_STATUS_INVALID_TASK = 8,
  GPN_STATUS_PANIC = 9,
} GpnStatus;

/**
 * Opaque estimator handle.
 */
typedef struct GpnEstimator GpnEstimator;

/**
 * Opaque model handle.
 */
typedef struct GpnModel GpnModel;

/**
 * Monte Carlo result; `estimate = win_fraction + tie_fraction / 2`.
 */
typedef struct GpnResult {
  double estimate;
  double win_fraction;
  double tie_fraction;
  double std_error;
  uint64_t n_samples;
  uint64_t seed;
} GpnResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` and returns the
 * size needed, including the NUL. An empty message means the last call succeeded.
 *
 * # Safety
 * `buf` must be null or point to at least `len` writable bytes.
 */
size_t gpn_last_error_message(char *buf, size_t len);

double gpn_normal_cdf(double z);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
enum GpnStatus gpn_normal_quantile(double p, double *out);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
enum GpnStatus gpn_regularized_gamma_p(double alpha, double x, double *out);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
enum GpnStatus gpn_gamma_median(double alpha, double *out);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
enum GpnStatus gpn_model_normal(double sigma1, double sigma2, double rho, struct GpnModel **out);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
enum GpnStatus gpn_model_exponential(double sigma1, double sigma2, struct GpnModel **out);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
enum GpnStatus gpn_model_gamma(double alpha1, double alpha2, struct GpnModel **out);

/**
 * # Safety
 * `out` must be null or valid for writes.
 */
enum GpnStatus gpn_model_power(double alpha1, double alpha2, struct GpnModel **out);

/**
 * Parses a model from its JSON form, e.g. `{"name":"gamma","alpha1":1,"alpha2":2}`.
 *
 * # Safety
 * `json` must be null or a NUL-terminated string; `out` must be null or valid for writes.
 */
enum GpnStatus gpn_model_from_json(const char *json, struct GpnModel **out);

/**
 * # Safety
 * `model` must be null or a handle from a `gpn_model_*` constructor not yet freed.
 */
void gpn_model_free(struct GpnModel *model);

/**
 * # Safety
 * `model` must be a live handle; `out` must be null or valid for writes.
 */
enum GpnStatus gpn_model_kind(const struct GpnModel *model, enum GpnProblemKind *out);

/**
 * Median of Z_component given D = t at gap `lambda`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be null or valid for writes.
 */
enum GpnStatus gpn_model_cond_median(const struct GpnModel *model,
                                     uint8_t component,
                                     double lambda,
                                     double t,
                                     double *out);

/**
 * P[Z_component <= s | D = t] at gap `lambda`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be null or valid for writes.
 */
enum GpnStatus gpn_model_cond_cdf(const struct GpnModel *model,
                                  uint8_t component,
                                  double lambda,
                                  double t,
                                  double s,
                                  double *out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be null or valid for writes.
 */
enum GpnStatus gpn_model_d_density(const struct GpnModel *model,
                                   double lambda,
                                   double t,
                                   double *out);

/**
 * Looks up a catalog estimator for `component` (1 or 2). Pass NaN as `nu`
 * for names outside the ν families.
 *
 * # Safety
 * `model` must be a live handle, `name` a NUL-terminated string and `out`
 * null or valid for writes.
 */
enum GpnStatus gpn_estimator_lookup(const struct GpnModel *model,
                                    uint8_t component,
                                    const char *name,
                                    double nu,
                                    struct GpnEstimator **out);

/**
 * Clamp-improves `base` with the model's default bounds.
 *
 * # Safety
 * `model` and `base` must be live handles; `out` must be null or valid for writes.
 */
enum GpnStatus gpn_estimator_clamp(const struct GpnModel *model,
                                   const struct GpnEstimator *base,
                                   struct GpnEstimator **out);

/**
 * # Safety
 * `estimator` must be null or a live handle.
 */
void gpn_estimator_free(struct GpnEstimator *estimator);

/**
 * Copies the estimator's label into `buf`; returns the size needed including the NUL,
 * or 0 when `estimator` is null.
 *
 * # Safety
 * `estimator` must be null or a live handle; `buf` null or `len` writable bytes.
 */
size_t gpn_estimator_name(const struct GpnEstimator *estimator, char *buf, size_t len);

/**
 * # Safety
 * `estimator` must be a live handle; `out` must be null or valid for writes.
 */
enum GpnStatus gpn_estimator_psi(const struct GpnEstimator *estimator, double t, double *out);

/**
 * Estimate of the estimator's target parameter from the observation (x1, x2).
 *
 * # Safety
 * `estimator` must be a live handle; `out` must be null or valid for writes.
 */
enum GpnStatus gpn_estimator_evaluate(const struct GpnEstimator *estimator,
                                      double x1,
                                      double x2,
                                      double *out);

/**
 * Monte Carlo GPN of `candidate` relative to `reference` at gap θ2 − θ1
 * (location) or θ2/θ1 (scale). `loss` is a `GpnLoss` value.
 *
 * # Safety
 * Handles must be live; `out` must be null or valid for writes.
 */
enum GpnStatus gpn_monte_carlo(const struct GpnModel *model,
                               const struct GpnEstimator *candidate,
                               const struct GpnEstimator *reference,
                               double gap,
                               int32_t loss,
                               uint64_t n_samples,
                               uint64_t seed,
                               struct GpnResult *out);

/**
 * Deterministic quadrature GPN; `loss` must be an absolute-error `GpnLoss`.
 *
 * # Safety
 * Handles must be live; `out` must be null or valid for writes.
 */
enum GpnStatus gpn_oracle(const struct GpnModel *model,
                          const struct GpnEstimator *candidate,
                          const struct GpnEstimator *reference,
                          double gap,
                          int32_t loss,
                          double *out);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* GPN_H */
