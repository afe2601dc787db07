#ifndef HLINEQ_H
#define HLINEQ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>
#include <stdbool.h>

/**
 * Status codes returned by every `hl_*` function.
 */
typedef enum HlStatus {
  HL_STATUS_OK = 0,
  HL_STATUS_NULL_POINTER = 1,
  HL_STATUS_INVALID_ARGUMENT = 2,
  HL_STATUS_BUFFER_TOO_SMALL = 3,
  HL_STATUS_PANIC = 4,
} HlStatus;

/**
 * Opaque non-negative tensor handle. Free with [`hl_tensor_free`].
 */
typedef struct HlTensor HlTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
uintptr_t hl_last_error_message(char *buf, uintptr_t cap);

/**
 * Builds a tensor from a row-major buffer of `len` entries.
 *
 * # Safety
 * `shape` must hold `order` values and `data` `len` values; `out` must be
 * writable.
 */
enum HlStatus hl_tensor_new(const uintptr_t *shape,
                            uintptr_t order,
                            const double *data,
                            uintptr_t len,
                            struct HlTensor **out);

/**
 * Parses `{"shape":[..],"data":[..]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum HlStatus hl_tensor_from_json(const char *json, struct HlTensor **out);

/**
 * # Safety
 * `t` must be null or a handle from this library not yet freed.
 */
void hl_tensor_free(struct HlTensor *t);

/**
 * Number of axes, or 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
uintptr_t hl_tensor_order(const struct HlTensor *t);

/**
 * Copies the shape into `out` (capacity `cap`).
 *
 * # Safety
 * `t` must be a live handle and `out` must hold `cap` values.
 */
enum HlStatus hl_tensor_shape(const struct HlTensor *t, uintptr_t *out, uintptr_t cap);

/**
 * Number of entries, or 0 for a null handle.
 *
 * # Safety
 * `t` must be null or a live handle.
 */
uintptr_t hl_tensor_len(const struct HlTensor *t);

/**
 * Copies the row-major entries into `out` (capacity `cap`).
 *
 * # Safety
 * `t` must be a live handle and `out` must hold `cap` values.
 */
enum HlStatus hl_tensor_data(const struct HlTensor *t, double *out, uintptr_t cap);

/**
 * δ of `p[0..m]`; `INFINITY` when Σ1/p ≥ 1.
 *
 * # Safety
 * `p` must hold `m` values; `out` must be writable.
 */
enum HlStatus hl_delta(const double *p, uintptr_t m, double *out);

/**
 * Critical exponents for `(p, σ)` written to `out[0..m]`.
 *
 * # Safety
 * `p` and `out` must hold `m` values; `sigma` must be null or hold `m`.
 */
enum HlStatus hl_critical_exponents(const double *p,
                                    const uintptr_t *sigma,
                                    uintptr_t m,
                                    double *out);

/**
 * Writes 0 to `out_level` when `q` is admissible for `(p, σ)`, otherwise
 * the 1-based level `k` of the first violated condition.
 *
 * # Safety
 * `p` and `q` must hold `m` values; `sigma` must be null or hold `m`;
 * `out_level` must be writable.
 */
enum HlStatus hl_admissible(const double *p,
                            const uintptr_t *sigma,
                            const double *q,
                            uintptr_t m,
                            uintptr_t *out_level);

/**
 * Mixed norm with nesting `σ` (outermost first) and exponents `q`, one per
 * axis of `t`.
 *
 * # Safety
 * `t` must be a live handle; `q` must hold `order(t)` values; `sigma` must
 * be null or hold `order(t)`; `out` must be writable.
 */
enum HlStatus hl_mixed_norm(const struct HlTensor *t,
                            const uintptr_t *sigma,
                            const double *q,
                            double *out);

/**
 * Lower estimate of the operator norm on `ℓ_{p_1} × ⋯ × ℓ_{p_m}` by
 * alternating ascent. `out_exact` is set when the value is exact.
 *
 * # Safety
 * `t` must be a live handle; `p` must hold `order(t)` values; `out_value`
 * must be writable and `out_exact` null or writable.
 */
enum HlStatus hl_opnorm(const struct HlTensor *t,
                        const double *p,
                        uintptr_t restarts,
                        uint64_t seed,
                        double *out_value,
                        bool *out_exact);

/**
 * Collapses the last axis: `A = Σ_j D^{δ(p_m)}`. Writes the new handle to
 * `out` and the `m−1` reduced exponents to `out_spaces`.
 *
 * # Safety
 * `t` must be a live handle of order `m ≥ 2`; `p` must hold `m` values;
 * `out_spaces` must hold `m−1`; `out` must be writable.
 */
enum HlStatus hl_reduce(const struct HlTensor *t,
                        const double *p,
                        struct HlTensor **out,
                        double *out_spaces);

/**
 * The diagonal `B_n` of order `m`.
 *
 * # Safety
 * `out` must be writable.
 */
enum HlStatus hl_diagonal(uintptr_t m, uintptr_t n, struct HlTensor **out);

/**
 * Diagonal with the first `pin_count` σ-levels fixed at index 1.
 *
 * # Safety
 * `sigma` must be null or hold `m` values; `out` must be writable.
 */
enum HlStatus hl_pinned_diagonal(uintptr_t m,
                                 uintptr_t n,
                                 uintptr_t pin_count,
                                 const uintptr_t *sigma,
                                 struct HlTensor **out);

/**
 * Closed-form norm of `B_n` on `ℓ_{p_1} × ⋯ × ℓ_{p_m}`.
 *
 * # Safety
 * `p` must hold `m` values; `out` must be writable.
 */
enum HlStatus hl_diagonal_norm(uintptr_t n, const double *p, uintptr_t m, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HLINEQ_H */
