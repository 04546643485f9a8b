#ifndef DERHAM_H
#define DERHAM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum DerhamStatus {
  DERHAM_STATUS_OK = 0,
  DERHAM_STATUS_NULL_POINTER = 1,
  DERHAM_STATUS_INVALID_ARGUMENT = 2,
  DERHAM_STATUS_CONFIG = 3,
  DERHAM_STATUS_SOLVER = 4,
  DERHAM_STATUS_INVARIANT = 5,
  DERHAM_STATUS_IO = 6,
  DERHAM_STATUS_BUFFER_TOO_SMALL = 7,
  DERHAM_STATUS_PANIC = 8,
} DerhamStatus;

/**
 * Function space family.
 */
typedef enum DerhamFamily {
  DERHAM_FAMILY_V0 = 0,
  DERHAM_FAMILY_V1 = 1,
  DERHAM_FAMILY_V2 = 2,
} DerhamFamily;

/**
 * Opaque handle to an assembled de Rham complex.
 */
typedef struct DerhamComplex DerhamComplex;

/**
 * Opaque handle to a running simulation.
 */
typedef struct DerhamSimulation DerhamSimulation;

/**
 * One row of run diagnostics.
 */
typedef struct DerhamDiagnostics {
  uint64_t step;
  double time;
  double energy;
  double enstrophy;
  double mass;
  double total_vorticity;
  double div_l2;
  uint64_t newton_iters;
  double residual_norm;
} DerhamDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * NUL-terminated library version. Owned by the library.
 */
const char *derham_version(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL,
 * or 0 when there is no error.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t derham_last_error(char *buf, size_t len);

/**
 * Builds the complex on an `nx` by `ny` periodic mesh of size `lx` by `ly`.
 *
 * # Safety
 * `out` must be a valid pointer; on success it receives a handle to be
 * released with [`derham_complex_free`].
 */
enum DerhamStatus derham_complex_new(size_t nx,
                                     size_t ny,
                                     double lx,
                                     double ly,
                                     struct DerhamComplex **out);

/**
 * # Safety
 * `complex` must be null or a handle from [`derham_complex_new`] not yet freed.
 */
void derham_complex_free(struct DerhamComplex *complex);

/**
 * Number of global degrees of freedom of a space.
 *
 * # Safety
 * `complex` must be a live handle and `out` a valid pointer.
 */
enum DerhamStatus derham_complex_ndofs(const struct DerhamComplex *complex,
                                       enum DerhamFamily family,
                                       size_t *out);

/**
 * Applies `div ∘ grad_perp` to `psi` (length V0) and writes the V2 result
 * to `out` (length `out_len`).
 *
 * # Safety
 * Pointers must be valid for the given lengths.
 */
enum DerhamStatus derham_complex_div_grad_perp(const struct DerhamComplex *complex,
                                               const double *psi,
                                               size_t psi_len,
                                               double *out,
                                               size_t out_len);

/**
 * Creates a simulation from INI config text.
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DerhamStatus derham_simulation_new(const char *config, struct DerhamSimulation **out);

/**
 * # Safety
 * `sim` must be null or a handle from [`derham_simulation_new`] not yet freed.
 */
void derham_simulation_free(struct DerhamSimulation *sim);

/**
 * Advances the simulation by `steps` time steps.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum DerhamStatus derham_simulation_step(struct DerhamSimulation *sim, size_t steps);

/**
 * Diagnostics of the current state.
 *
 * # Safety
 * `sim` must be a live handle and `out` a valid pointer.
 */
enum DerhamStatus derham_simulation_diagnostics(const struct DerhamSimulation *sim,
                                                struct DerhamDiagnostics *out);

/**
 * Copies the coefficients of the named prognostic field into `buf`.
 * `written` receives the field length; if `buf_len` is too small nothing
 * is copied and `BufferTooSmall` is returned.
 *
 * # Safety
 * `sim` must be a live handle, `name` NUL-terminated, `buf` valid for
 * `buf_len` values (or null when `buf_len` is 0) and `written` valid.
 */
enum DerhamStatus derham_simulation_field(const struct DerhamSimulation *sim,
                                          const char *name,
                                          double *buf,
                                          size_t buf_len,
                                          size_t *written);

/**
 * Discrete linear shallow water frequencies at wavenumber `(kx, ky)` on a
 * uniform mesh with spacing `(dx, dy)`, sorted ascending into `out[0..3]`.
 *
 * # Safety
 * `out` must point to three writable doubles.
 */
enum DerhamStatus derham_dispersion(double kx,
                                    double ky,
                                    double f,
                                    double g,
                                    double h,
                                    double dx,
                                    double dy,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DERHAM_H */
