#ifndef PPAPPROX_H
#define PPAPPROX_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * ABI version, bumped on any incompatible change.
 */
#define PPA_ABI_VERSION 1

/**
 * Result of every call.
 */
typedef enum PpaStatus {
  PPA_STATUS_OK = 0,
  PPA_STATUS_NULL_POINTER = 1,
  PPA_STATUS_INVALID_INPUT = 2,
  PPA_STATUS_INVALID_CONFIGURATION = 3,
  PPA_STATUS_RESOURCE_EXHAUSTED = 4,
  PPA_STATUS_IO = 5,
  PPA_STATUS_JSON = 6,
  /**
   * A string argument was not valid UTF-8.
   */
  PPA_STATUS_UTF8 = 7,
  PPA_STATUS_PANICKED = 8,
} PpaStatus;

typedef enum PpaGeometry {
  PPA_GEOMETRY_BOX = 0,
  PPA_GEOMETRY_TORUS = 1,
} PpaGeometry;

typedef enum PpaVerdict {
  PPA_VERDICT_BOUND_HOLDS = 0,
  PPA_VERDICT_BOUND_VACUOUS = 1,
  PPA_VERDICT_VIOLATION = 2,
  PPA_VERDICT_INCONCLUSIVE = 3,
} PpaVerdict;

/**
 * Opaque point configuration.
 */
typedef struct PpaConfig PpaConfig;

/**
 * Opaque verification report.
 */
typedef struct PpaReport PpaReport;

/**
 * Summary of a bound.
 */
typedef struct PpaBound {
  double total;
  double total_stderr;
  /**
   * Nonzero when the total is at least 1.
   */
  uint8_t vacuous;
  /**
   * Nonzero when every side condition holds.
   */
  uint8_t valid;
} PpaBound;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

uint32_t ppa_abi_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *ppa_last_error(void);

/**
 * Releases a string returned by the library. Null is ignored.
 */
void ppa_string_free(char *s);

/**
 * Configuration of `n` points of the unit interval.
 */
enum PpaStatus ppa_config_new_interval(const double *xs, size_t n, struct PpaConfig **result);

/**
 * Configuration of `n` points of `[0,1]^dim`, coordinates row-major.
 */
enum PpaStatus ppa_config_new_cube(const double *coords,
                                   size_t n,
                                   size_t dim,
                                   struct PpaConfig **result);

/**
 * Configuration from its JSON form.
 */
enum PpaStatus ppa_config_from_json(const char *json, struct PpaConfig **result);

enum PpaStatus ppa_config_len(const struct PpaConfig *config, size_t *result);

/**
 * Releases a configuration. Null is ignored.
 */
void ppa_config_free(struct PpaConfig *config);

/**
 * `rho1` under the capped Euclidean ground distance.
 */
enum PpaStatus ppa_rho1(const struct PpaConfig *a,
                        const struct PpaConfig *b,
                        enum PpaGeometry geometry,
                        double *result);

/**
 * `rho1''` under the capped Euclidean ground distance.
 */
enum PpaStatus ppa_rho1_dd(const struct PpaConfig *a,
                           const struct PpaConfig *b,
                           enum PpaGeometry geometry,
                           double *result);

/**
 * Total variation between two pmfs on `0, 1, 2, ...`.
 */
enum PpaStatus ppa_tv_distance(const double *p,
                               size_t np,
                               const double *q,
                               size_t nq,
                               double *result);

enum PpaStatus ppa_matern_bound(double mu,
                                double r,
                                size_t d,
                                enum PpaGeometry geometry,
                                size_t grid,
                                struct PpaBound *result);

/**
 * Both occupancy bounds for `s` balls in `n` equally likely urns, threshold `m`.
 */
enum PpaStatus ppa_occupancy_bound(size_t n,
                                   uint64_t s,
                                   uint64_t m,
                                   struct PpaBound *exact,
                                   struct PpaBound *explicit_);

/**
 * Bound on `E(1/X)` for `X >= 1` with the given mean and variance.
 */
enum PpaStatus ppa_inverse_moment_bound(double mean, double var, double *result);

enum PpaStatus ppa_reproduce_remark_3_7(double *joint, double *factorized);

/**
 * `direction` is -1, 0 or 1 as the conditional probability is below, at or above the unconditional one.
 */
enum PpaStatus ppa_reproduce_counterexample_4_7(double b,
                                                double q,
                                                double *conditional,
                                                double *unconditional,
                                                int32_t *direction);

/**
 * Runs an experiment described by JSON and returns the report handle.
 */
enum PpaStatus ppa_run_experiment(const char *config_json, struct PpaReport **result);

/**
 * Runs an experiment and returns the report as JSON; free it with [`ppa_string_free`].
 */
enum PpaStatus ppa_run_experiment_json(const char *config_json, char **result);

enum PpaStatus ppa_report_verdict(const struct PpaReport *report, enum PpaVerdict *result);

enum PpaStatus ppa_report_bound(const struct PpaReport *report, struct PpaBound *result);

enum PpaStatus ppa_report_seed(const struct PpaReport *report, uint64_t *result);

/**
 * The report as JSON; free it with [`ppa_string_free`].
 */
enum PpaStatus ppa_report_json(const struct PpaReport *report, char **result);

/**
 * Releases a report. Null is ignored.
 */
void ppa_report_free(struct PpaReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPAPPROX_H */
