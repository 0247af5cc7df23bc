#ifndef DYNSTRENGTH_H
#define DYNSTRENGTH_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum DsStatus {
  DS_STATUS_OK = 0,
  DS_STATUS_NULL_POINTER = 1,
  DS_STATUS_INVALID_ARGUMENT = 2,
  DS_STATUS_DIMENSION = 3,
  DS_STATUS_NOT_UNITARY = 4,
  DS_STATUS_PARSE = 5,
  DS_STATUS_NUMERICAL = 6,
  DS_STATUS_IO = 7,
  DS_STATUS_PANIC = 8,
} DsStatus;

/**
 * Opaque bipartite gate: a unitary together with its cut.
 */
typedef struct DsGate DsGate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the library; valid until
 * the next failing call on the same thread.
 */
const char *ds_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ds_version(void);

/**
 * Builds a gate from a spec such as `cnot`, `up:0.3` or `haar:4,7`. `partition` is
 * `dA:dB` or null for the gate's natural cut.
 *
 * # Safety
 * `spec` and a non-null `partition` must be NUL-terminated strings; `out` must be valid
 * for a pointer write.
 */
enum DsStatus ds_gate_from_spec(const char *spec, const char *partition, struct DsGate **out);

/**
 * Builds a gate from a row-major matrix of side `d_a·d_b` given as separate real and
 * imaginary arrays. Fails unless the matrix is unitary.
 *
 * # Safety
 * `re` and `im` must each hold `(d_a·d_b)²` doubles; `out` must be valid for a pointer
 * write.
 */
enum DsStatus ds_gate_from_matrix(const double *re,
                                  const double *im,
                                  size_t d_a,
                                  size_t d_b,
                                  struct DsGate **out);

/**
 * Releases a gate. Null is ignored.
 *
 * # Safety
 * `g` must be null or a handle from this library that has not been freed.
 */
void ds_gate_free(struct DsGate *g);

/**
 * Writes the subsystem dimensions of a gate.
 *
 * # Safety
 * `g` must be a live handle; `d_a` and `d_b` must be valid for writes.
 */
enum DsStatus ds_gate_dims(const struct DsGate *g, size_t *d_a, size_t *d_b);

/**
 * Exact K_Har, the log₂ Schmidt number.
 *
 * # Safety
 * `g` must be a live handle; `out` must be valid for a write.
 */
enum DsStatus ds_k_har(const struct DsGate *g, double *out);

/**
 * Exact K_Sch, the Schmidt-coefficient entropy.
 *
 * # Safety
 * `g` must be a live handle; `out` must be valid for a write.
 */
enum DsStatus ds_k_sch(const struct DsGate *g, double *out);

/**
 * Numerical lower bound on K_E with equal-size ancillas. `restarts` of zero keeps the
 * library default.
 *
 * # Safety
 * `g` must be a live handle; `out` must be valid for a write.
 */
enum DsStatus ds_k_e(const struct DsGate *g, uint64_t seed, size_t restarts, double *out);

/**
 * Closed-form K_HS of a two-qubit gate.
 *
 * # Safety
 * `g` must be a live handle; `out` must be valid for a write.
 */
enum DsStatus ds_k_hs(const struct DsGate *g, double *out);

/**
 * Canonical angles (θx, θy, θz) and Schmidt class of a two-qubit gate.
 *
 * # Safety
 * `g` must be a live handle; `theta` must be valid for three writes and `class` for one.
 */
enum DsStatus ds_canonical(const struct DsGate *g, double *theta, uint32_t *class_);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DYNSTRENGTH_H */
