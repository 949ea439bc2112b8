#ifndef SDWAVE_H
#define SDWAVE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Number of columns in one energy record.
 */
#define SDW_ENERGY_FIELDS 13

/**
 * Status codes. Zero is success.
 */
typedef enum SdwStatus {
  SDW_STATUS_OK = 0,
  SDW_STATUS_NULL_POINTER = 1,
  SDW_STATUS_CONFIG = 2,
  SDW_STATUS_USAGE = 3,
  SDW_STATUS_NUMERIC = 4,
  SDW_STATUS_DOMAIN = 5,
  SDW_STATUS_IO = 6,
  SDW_STATUS_PANIC = 7,
  SDW_STATUS_BUFFER_TOO_SMALL = 8,
} SdwStatus;

/**
 * Opaque radial grid.
 */
typedef struct SdwGrid SdwGrid;

/**
 * Opaque result of one configured run: energy series and verdict.
 */
typedef struct SdwRun SdwRun;

/**
 * Blow-up verdict. `tag` is 0 for no escape up to `t_end`, 1 for escape.
 * Unavailable values are NaN.
 */
typedef struct SdwVerdict {
  uint32_t tag;
  double t_end;
  double t_est;
  double t_last_stable;
  double kappa;
  double peak_norm;
  bool refinement_confirmed;
  double sign_functional;
} SdwVerdict;

/**
 * Region membership of one exponent point.
 */
typedef struct SdwMembership {
  bool member;
  bool boundary;
  bool open_boundary;
} SdwMembership;

typedef struct SdwConstants {
  double alpha1;
  double alpha2;
  double alpha1_residual;
  double alpha2_residual;
} SdwConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *sdw_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sdw_version(void);

/**
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SdwStatus sdw_grid_new(size_t n,
                            double r_obs,
                            double r_out,
                            size_t j_max,
                            struct SdwGrid **out);

/**
 * # Safety
 * `grid` must come from `sdw_grid_new` and not have been freed; null is ignored.
 */
void sdw_grid_free(struct SdwGrid *grid);

/**
 * Node count `j_max + 1`, or 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t sdw_grid_len(const struct SdwGrid *grid);

/**
 * Copies the node radii into `buf`, which must hold `sdw_grid_len` values.
 *
 * # Safety
 * `grid` must be a live handle and `buf` valid for `cap` writes.
 */
enum SdwStatus sdw_grid_nodes(const struct SdwGrid *grid, double *buf, size_t cap);

/**
 * Runs the evolution and blow-up detection described by a TOML run configuration.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum SdwStatus sdw_run_from_toml(const char *config_toml, struct SdwRun **out);

/**
 * # Safety
 * `run` must come from `sdw_run_from_toml` and not have been freed; null is ignored.
 */
void sdw_run_free(struct SdwRun *run);

/**
 * Number of stored energy records, or 0 for a null handle.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
size_t sdw_run_record_count(const struct SdwRun *run);

/**
 * Copies the energy records row-major, `SDW_ENERGY_FIELDS` values per row,
 * in the column order of the energy CSV.
 *
 * # Safety
 * `run` must be a live handle and `buf` valid for `cap` writes.
 */
enum SdwStatus sdw_run_records(const struct SdwRun *run, double *buf, size_t cap);

/**
 * # Safety
 * `run` must be a live handle and `out` writable.
 */
enum SdwStatus sdw_run_verdict(const struct SdwRun *run, struct SdwVerdict *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum SdwStatus sdw_theory_derivative(size_t n, double q, struct SdwMembership *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum SdwStatus sdw_theory_mixed(size_t n, double p, double q, struct SdwMembership *out);

/**
 * # Safety
 * `out` must be writable.
 */
enum SdwStatus sdw_theory_constants(struct SdwConstants *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SDWAVE_H */
