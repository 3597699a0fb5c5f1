#ifndef MTERM_LAB_H
#define MTERM_LAB_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MtlStatus {
  MTL_STATUS_OK = 0,
  MTL_STATUS_NULL_POINTER = 1,
  MTL_STATUS_INVALID_ARGUMENT = 2,
  MTL_STATUS_DIMENSION_MISMATCH = 3,
  /**
   * The quantity is undefined at this input, e.g. the norming functional of 0.
   */
  MTL_STATUS_UNDEFINED = 4,
  /**
   * The request exceeds a size guard or needs a case the routine does not cover.
   */
  MTL_STATUS_UNSUPPORTED = 5,
  MTL_STATUS_SERIALIZATION = 6,
  MTL_STATUS_IO = 7,
  MTL_STATUS_PANIC = 8,
} MtlStatus;

/**
 * Selection rule for the weak greedy step.
 */
typedef enum MtlPolicy {
  MTL_POLICY_EXACT = 0,
  MTL_POLICY_LAZY_WEAK = 1,
  MTL_POLICY_RANDOM_WEAK = 2,
} MtlPolicy;

/**
 * An ℓ_p^n space.
 */
typedef struct MtlSpace MtlSpace;

/**
 * A finite symmetric system of atoms.
 */
typedef struct MtlSystem MtlSystem;

/**
 * The recorded run of the weak relaxed greedy algorithm.
 */
typedef struct MtlTrace MtlTrace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next call into this library on the thread.
 */
const char *mtl_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void mtl_string_free(char *s);

/**
 * Creates ℓ_p^dim with `1 < p < ∞`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum MtlStatus mtl_space_new(size_t dim, double p, struct MtlSpace **out);

/**
 * # Safety
 * `space` must be null or a handle from [`mtl_space_new`].
 */
void mtl_space_free(struct MtlSpace *space);

/**
 * # Safety
 * `space` must be valid, `x` must point to `len` doubles, `out` to one.
 */
enum MtlStatus mtl_space_norm(const struct MtlSpace *space,
                              const double *x,
                              size_t len,
                              double *out);

/**
 * Writes the norming functional of `f` into `out` (both of length `len`).
 *
 * # Safety
 * `space` must be valid; `f` and `out` must point to `len` doubles.
 */
enum MtlStatus mtl_space_norming_functional(const struct MtlSpace *space,
                                            const double *f,
                                            size_t len,
                                            double *out);

/**
 * The canonical basis `{e_j}` of `space`.
 *
 * # Safety
 * `space` and `out` must be valid pointers.
 */
enum MtlStatus mtl_system_canonical(const struct MtlSpace *space, struct MtlSystem **out);

/**
 * `n_atoms` seeded Gaussian directions normalized in `space`.
 *
 * # Safety
 * `space` and `out` must be valid pointers.
 */
enum MtlStatus mtl_system_random(const struct MtlSpace *space,
                                 size_t n_atoms,
                                 uint64_t seed,
                                 struct MtlSystem **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MtlStatus mtl_system_from_json(const char *json, struct MtlSystem **out);

/**
 * # Safety
 * `system` and `out` must be valid; free the result with [`mtl_string_free`].
 */
enum MtlStatus mtl_system_to_json(const struct MtlSystem *system, char **out);

/**
 * Number of atoms, or 0 for a null handle.
 *
 * # Safety
 * `system` must be null or valid.
 */
size_t mtl_system_len(const struct MtlSystem *system);

/**
 * # Safety
 * `system` must be null or a handle from this library.
 */
void mtl_system_free(struct MtlSystem *system);

/**
 * Runs `m_max` steps of the weak relaxed greedy algorithm with constant
 * weakness `t ∈ (0, 1]`. `policy` is an [`MtlPolicy`] value. Pass NaN for
 * `b` when the hull distance is unknown.
 *
 * # Safety
 * `system` and `out` must be valid; `f` must point to `len` doubles.
 */
enum MtlStatus mtl_wrga_run(const struct MtlSystem *system,
                            const double *f,
                            size_t len,
                            double t,
                            uint32_t policy,
                            size_t m_max,
                            double b,
                            uint64_t seed,
                            struct MtlTrace **out);

/**
 * Number of executed steps, or 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or valid.
 */
size_t mtl_trace_len(const struct MtlTrace *trace);

/**
 * Writes `‖f_0‖, …, ‖f_m‖` (`mtl_trace_len + 1` values) into `out`.
 *
 * # Safety
 * `trace` must be valid and `out` must hold `cap` doubles.
 */
enum MtlStatus mtl_trace_residuals(const struct MtlTrace *trace, double *out, size_t cap);

/**
 * Writes the final approximant `G_m` (length `len`) into `out`.
 *
 * # Safety
 * `trace` must be valid and `out` must hold `len` doubles.
 */
enum MtlStatus mtl_trace_approximant(const struct MtlTrace *trace, double *out, size_t len);

/**
 * One JSON object per step, newline separated.
 *
 * # Safety
 * `trace` and `out` must be valid; free the result with [`mtl_string_free`].
 */
enum MtlStatus mtl_trace_to_jsonl(const struct MtlTrace *trace, char **out);

/**
 * # Safety
 * `trace` must be null or a handle from [`mtl_wrga_run`].
 */
void mtl_trace_free(struct MtlTrace *trace);

/**
 * Best m-term error of `x` in the canonical basis of ℓ_p^len.
 *
 * # Safety
 * `x` must point to `len` doubles and `out` to one.
 */
enum MtlStatus mtl_sigma_m_canonical(const double *x, size_t len, size_t m, double p, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MTERM_LAB_H */
