#ifndef KSE_H
#define KSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KseField {
  KSE_FIELD_RHO = 0,
  KSE_FIELD_C = 1,
  KSE_FIELD_OMEGA = 2,
} KseField;

typedef enum KseStatus {
  KSE_STATUS_OK = 0,
  KSE_STATUS_CONFIG_ERROR = 2,
  KSE_STATUS_BLOW_UP = 3,
  KSE_STATUS_AUDIT_FAILURE = 4,
  KSE_STATUS_IO_ERROR = 5,
  KSE_STATUS_NULL_POINTER = 10,
  KSE_STATUS_INVALID_ARGUMENT = 11,
  KSE_STATUS_BUFFER_TOO_SMALL = 12,
  KSE_STATUS_PANIC = 13,
} KseStatus;

/**
 * Opaque simulation handle.
 */
typedef struct KseSimulation KseSimulation;

/**
 * Scalar diagnostics of the current state.
 */
typedef struct KseDiagnostics {
  double t;
  double mass_rho;
  double min_rho;
  double min_c;
  /**
   * ‖c‖_q for q = 1, 2, 4, 8, ∞.
   */
  double c_lq[5];
  double rho_linf;
  double circulation;
  double x_energy;
  double y_quantity;
  double tail_fraction;
} KseDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *kse_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call on the same thread.
 */
const char *kse_last_error_message(void);

/**
 * Creates a simulation from configuration text (same format as the
 * command line `--config` file).
 *
 * # Safety
 * `config_text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum KseStatus kse_simulation_new_from_config(const char *config_text, struct KseSimulation **out);

/**
 * Canonical initial data on an `n × n` grid of the 2π torus with
 * chemical amplitude `amplitude_c`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum KseStatus kse_simulation_new_canonical(uint32_t n,
                                            double amplitude_c,
                                            struct KseSimulation **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `sim` must come from a constructor of this library and not be used
 * afterwards.
 */
void kse_simulation_free(struct KseSimulation *sim);

/**
 * Points per axis.
 *
 * # Safety
 * `sim` must be a live handle or NULL.
 */
uint32_t kse_simulation_grid_size(const struct KseSimulation *sim);

/**
 * Current simulation time, NaN for a NULL handle.
 *
 * # Safety
 * `sim` must be a live handle or NULL.
 */
double kse_simulation_time(const struct KseSimulation *sim);

/**
 * One step of size `dt`.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum KseStatus kse_simulation_step(struct KseSimulation *sim, double dt);

/**
 * Integrates with CFL step control until time `t_end`.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum KseStatus kse_simulation_advance(struct KseSimulation *sim, double t_end);

/**
 * Copies one field (row-major, `n·n` values, x2 fastest) into `buf`.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum KseStatus kse_simulation_copy_field(const struct KseSimulation *sim,
                                         enum KseField field,
                                         double *buf,
                                         size_t len);

/**
 * Fills `out` with the diagnostics of the current state.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum KseStatus kse_simulation_diagnostics(const struct KseSimulation *sim,
                                          struct KseDiagnostics *out);

/**
 * Writes the current state as a binary snapshot.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum KseStatus kse_simulation_write_snapshot(const struct KseSimulation *sim, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KSE_H */
