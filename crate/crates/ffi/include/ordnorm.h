#ifndef ORDNORM_H
#define ORDNORM_H

/* Generated by cbindgen; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum OrdnormSolver {
  ORDNORM_SOLVER_BFGS = 0,
  ORDNORM_SOLVER_CONJUGATE_GRADIENT = 1,
} OrdnormSolver;

typedef enum OrdnormStatus {
  ORDNORM_STATUS_OK = 0,
  ORDNORM_STATUS_INVALID_ARGUMENT = 1,
  ORDNORM_STATUS_IO_ERROR = 2,
  ORDNORM_STATUS_PARSE_ERROR = 3,
  ORDNORM_STATUS_MODEL_ERROR = 4,
  /**
   * The fit handle is still produced; estimates come from the last iterate.
   */
  ORDNORM_STATUS_NOT_CONVERGED = 5,
  ORDNORM_STATUS_SINGULAR = 6,
  ORDNORM_STATUS_PANIC = 7,
} OrdnormStatus;

/**
 * A loaded or simulated dataset together with its model specification.
 */
typedef struct OrdnormDataset OrdnormDataset;

typedef struct OrdnormFit OrdnormFit;

typedef struct OrdnormFitConfig {
  enum OrdnormSolver solver;
  size_t max_iterations;
  double gradient_tolerance;
  bool compute_se;
  bool standardize;
  uint64_t seed;
} OrdnormFitConfig;

/**
 * Message of the last failed call on this thread, or null. Valid until the next call.
 */
const char *ordnorm_last_error(void);

/**
 * Library version as a static string.
 */
const char *ordnorm_version(void);

double ordnorm_std_normal_cdf(double x);

/**
 * `P(X ≤ x, Y ≤ y)` for a standard bivariate normal with correlation `rho`.
 */
double ordnorm_bvn_cdf(double x, double y, double rho);

/**
 * Loads a CSV file. `types` is a comma-separated list of `ordinal`/`gaussian`, one per
 * response in `formula`. With `na_pass` false, missing responses are an error.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be null or writable.
 */
enum OrdnormStatus ordnorm_dataset_load_csv(const char *path,
                                            const char *formula,
                                            const char *types,
                                            bool na_pass,
                                            struct OrdnormDataset **out);

/**
 * Simulates the built-in toy design (1000 units, y1, y2, z1, z2, X1, X2, X3).
 *
 * # Safety
 * `out` must be null or writable.
 */
enum OrdnormStatus ordnorm_dataset_simulate_toy(uint64_t seed, struct OrdnormDataset **out);

/**
 * Number of units, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t ordnorm_dataset_n_units(const struct OrdnormDataset *dataset);

/**
 * Number of responses, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t ordnorm_dataset_n_responses(const struct OrdnormDataset *dataset);

/**
 * # Safety
 * `dataset` must be null or a live handle; `path` must be null or NUL-terminated.
 */
enum OrdnormStatus ordnorm_dataset_write_csv(const struct OrdnormDataset *dataset,
                                             const char *path);

/**
 * # Safety
 * `dataset` must be null or a handle not yet freed.
 */
void ordnorm_dataset_free(struct OrdnormDataset *dataset);

struct OrdnormFitConfig ordnorm_fit_config_default(void);

/**
 * Fits the model. On `ORDNORM_STATUS_OK` or `ORDNORM_STATUS_NOT_CONVERGED`, `*out`
 * receives a fit handle. A null `config` selects the defaults.
 *
 * # Safety
 * `dataset` must be null or a live handle; `config` null or readable; `out` null or writable.
 */
enum OrdnormStatus ordnorm_fit(const struct OrdnormDataset *dataset,
                               const struct OrdnormFitConfig *config,
                               struct OrdnormFit **out);

/**
 * Restores a fit from the JSON produced by [`ordnorm_fit_to_json`].
 *
 * # Safety
 * `json` must be null or NUL-terminated; `out` null or writable.
 */
enum OrdnormStatus ordnorm_fit_from_json(const char *json, struct OrdnormFit **out);

/**
 * Number of parameters, or 0 for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
size_t ordnorm_fit_num_params(const struct OrdnormFit *fit);

/**
 * Copies the estimates (natural scale, layout order) into `out[0..num_params]`.
 *
 * # Safety
 * `fit` must be null or a live handle; `out` must hold `len` doubles.
 */
enum OrdnormStatus ordnorm_fit_estimates(const struct OrdnormFit *fit, double *out, size_t len);

/**
 * Copies the standard errors into `out[0..num_params]`; unavailable entries are NaN.
 *
 * # Safety
 * `fit` must be null or a live handle; `out` must hold `len` doubles.
 */
enum OrdnormStatus ordnorm_fit_std_errors(const struct OrdnormFit *fit, double *out, size_t len);

/**
 * Maximized pairwise log-likelihood, or NaN for a null handle.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
double ordnorm_fit_log_pl(const struct OrdnormFit *fit);

/**
 * # Safety
 * `fit` must be null or a live handle.
 */
double ordnorm_fit_claic(const struct OrdnormFit *fit);

/**
 * # Safety
 * `fit` must be null or a live handle.
 */
double ordnorm_fit_clbic(const struct OrdnormFit *fit);

/**
 * # Safety
 * `fit` must be null or a live handle.
 */
bool ordnorm_fit_converged(const struct OrdnormFit *fit);

/**
 * Name of parameter `index` (e.g. `y1 1|2`, `sigma.z1`), or null when out of range.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
char *ordnorm_fit_param_name(const struct OrdnormFit *fit, size_t index);

/**
 * # Safety
 * `fit` must be null or a live handle.
 */
char *ordnorm_fit_to_json(const struct OrdnormFit *fit);

/**
 * Text summary of the fit.
 *
 * # Safety
 * `fit` must be null or a live handle.
 */
char *ordnorm_fit_report(const struct OrdnormFit *fit);

/**
 * # Safety
 * `fit` must be null or a handle not yet freed.
 */
void ordnorm_fit_free(struct OrdnormFit *fit);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void ordnorm_string_free(char *s);

#endif  /* ORDNORM_H */
