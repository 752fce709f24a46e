#ifndef AFFINE_STRAND_H
#define AFFINE_STRAND_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every exported function.
 */
typedef enum AsStatus {
  AS_STATUS_OK = 0,
  AS_STATUS_NULL_POINTER = 1,
  AS_STATUS_INVALID_UTF8 = 2,
  AS_STATUS_INVALID_ARGUMENT = 3,
  AS_STATUS_CONFIG = 4,
  AS_STATUS_BLOW_UP = 5,
  AS_STATUS_IO = 6,
  AS_STATUS_OUT_OF_RANGE = 7,
  AS_STATUS_BUFFER_TOO_SMALL = 8,
  AS_STATUS_PANIC = 9,
} AsStatus;

/**
 * Evolved field selector for [`as_series_copy_field`].
 */
typedef enum AsField {
  AS_FIELD_RHO = 0,
  AS_FIELD_PI_T = 1,
  AS_FIELD_MU_T = 2,
  AS_FIELD_OMEGA_S = 3,
} AsField;

/**
 * Opaque validated scenario.
 */
typedef struct AsScenario AsScenario;

/**
 * Opaque sequence of snapshots.
 */
typedef struct AsSeries AsSeries;

/**
 * Summary of an identity-suite run.
 */
typedef struct AsIdentitySummary {
  size_t checks;
  size_t failed;
  /**
   * Largest `max_error / tolerance` over all checks.
   */
  double worst_ratio;
  bool all_passed;
} AsIdentitySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *as_last_error_message(void);

/**
 * Parses and validates a TOML scenario.
 *
 * # Safety
 * `toml` must be a NUL-terminated string and `out` a writable pointer.
 */
enum AsStatus as_scenario_from_toml(const char *toml, struct AsScenario **out);

/**
 * # Safety
 * `scenario` must come from [`as_scenario_from_toml`] and not be used again.
 */
void as_scenario_free(struct AsScenario *scenario);

/**
 * Number of grid points.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum AsStatus as_scenario_grid_size(const struct AsScenario *scenario, size_t *out);

/**
 * Runs the scenario. On [`AsStatus::BlowUp`] `out` still receives the
 * snapshots recorded before the failure.
 *
 * # Safety
 * `scenario` must be a live handle and `out` writable.
 */
enum AsStatus as_scenario_run(const struct AsScenario *scenario, struct AsSeries **out);

/**
 * Hamiltonian density at a point laid out as `(μ^s, μ^t, ρ, π^s, π^t)`.
 *
 * # Safety
 * `point` must hold 15 doubles; `scenario` must be live and `out` writable.
 */
enum AsStatus as_density(const struct AsScenario *scenario, const double *point, double *out);

/**
 * All 15 partial derivatives of the density, in the same layout as `point`.
 *
 * # Safety
 * `point` and `out` must each hold 15 doubles; `scenario` must be live.
 */
enum AsStatus as_gradient(const struct AsScenario *scenario, const double *point, double *out);

/**
 * # Safety
 * `series` must come from [`as_scenario_run`] and not be used again.
 */
void as_series_free(struct AsSeries *series);

/**
 * # Safety
 * `series` must be a live handle and `out` writable.
 */
enum AsStatus as_series_snapshot_count(const struct AsSeries *series, size_t *out);

/**
 * # Safety
 * `series` must be a live handle and `out` writable.
 */
enum AsStatus as_series_grid_size(const struct AsSeries *series, size_t *out);

/**
 * Time stamp of snapshot `index`.
 *
 * # Safety
 * `series` must be a live handle and `out` writable.
 */
enum AsStatus as_series_time(const struct AsSeries *series, size_t index, double *out);

/**
 * Total energy of snapshot `index`.
 *
 * # Safety
 * `series` must be a live handle and `out` writable.
 */
enum AsStatus as_series_energy(const struct AsSeries *series, size_t index, double *out);

/**
 * Copies one field of snapshot `index` into `buf` as `n` row-major triples.
 * `len` is the capacity of `buf` in doubles and must be at least `3n`.
 *
 * # Safety
 * `series` must be a live handle and `buf` must hold `len` doubles.
 */
enum AsStatus as_series_copy_field(const struct AsSeries *series,
                                   size_t index,
                                   enum AsField field,
                                   double *buf,
                                   size_t len);

/**
 * Writes snapshots, diagnostics and a manifest into `dir`.
 *
 * # Safety
 * `series` must be a live handle and `dir` a NUL-terminated path.
 */
enum AsStatus as_series_save(const struct AsSeries *series, const char *dir);

/**
 * Runs the seeded identity suite. `report_json`, when non-null, receives the
 * full report; release it with [`as_string_free`].
 *
 * # Safety
 * `summary` must be writable; `report_json` may be null.
 */
enum AsStatus as_identity_suite(uint64_t seed,
                                size_t trials,
                                struct AsIdentitySummary *summary,
                                char **report_json);

/**
 * # Safety
 * `s` must come from this library and not be used again.
 */
void as_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AFFINE_STRAND_H */
