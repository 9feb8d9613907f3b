#ifndef IPQ_H
#define IPQ_H

/* Generated by cbindgen; edit src/lib.rs instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>
#include <stdint.h>
#include <stddef.h>
#include <stdbool.h>

/**
 * Which queue implementation a handle wraps.
 */
typedef enum {
  /**
   * Amortized O(1)-move structure (distinct keys).
   */
  IPQ_IMPL_AMORTIZED = 0,
  /**
   * Worst-case O(1)-insert relaxed binomial forest (distinct keys).
   */
  IPQ_IMPL_WORST_CASE = 1,
  /**
   * Pair-item wrapper supporting duplicate keys.
   */
  IPQ_IMPL_IDENTICAL = 2,
  /**
   * Classic binary heap baseline.
   */
  IPQ_IMPL_BINARY = 3,
} IpqImpl;

/**
 * Call outcome.
 */
typedef enum {
  IPQ_STATUS_OK = 0,
  /**
   * Extract or find-min on an empty queue.
   */
  IPQ_STATUS_UNDERFLOW = 1,
  /**
   * Duplicate key offered to a distinct-keys implementation.
   */
  IPQ_STATUS_DUPLICATE_KEY = 2,
  /**
   * Null handle or invalid argument.
   */
  IPQ_STATUS_INVALID_ARGUMENT = 3,
  /**
   * A structural invariant failed validation.
   */
  IPQ_STATUS_INVARIANT_VIOLATION = 4,
  /**
   * Internal state corruption.
   */
  IPQ_STATUS_CORRUPT = 5,
} IpqStatus;

/**
 * Opaque queue handle; create with `ipq_new`, release with `ipq_free`.
 */
typedef struct IpqHandle IpqHandle;

/**
 * Move/comparison totals and per-operation maxima.
 */
typedef struct {
  uint64_t moves;
  uint64_t comparisons;
  uint64_t max_moves_per_op;
  uint64_t max_cmps_per_op;
  uint64_t rebuilds;
} IpqCounters;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Create an empty queue. Returns null only on allocation failure.
 */
IpqHandle *ipq_new(IpqImpl which);

/**
 * Create a queue from raw state `(elements, len)` — the strict-implicitness
 * entry point: the array contents are adopted verbatim.
 *
 * # Safety
 * `keys` must point to `len` readable `uint64_t` values (or be null with
 * `len == 0`).
 */
IpqHandle *ipq_from_elements(IpqImpl which, const uint64_t *keys, uintptr_t len);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `h` must have come from `ipq_new`/`ipq_from_elements` and not yet be freed.
 */
void ipq_free(IpqHandle *h);

/**
 * # Safety
 * `h` must be a live handle from this library or null.
 */
IpqStatus ipq_insert(IpqHandle *h, uint64_t key);

/**
 * Extract the minimum into `*out` (when non-null).
 *
 * # Safety
 * `h` must be a live handle or null; `out` must be writable or null.
 */
IpqStatus ipq_extract_min(IpqHandle *h, uint64_t *out);

/**
 * Read the minimum without removing it.
 *
 * # Safety
 * `h` must be a live handle or null; `out` must be writable or null.
 */
IpqStatus ipq_find_min(IpqHandle *h, uint64_t *out);

/**
 * Number of stored elements; zero for null handles.
 *
 * # Safety
 * `h` must be a live handle or null.
 */
uintptr_t ipq_len(const IpqHandle *h);

/**
 * Run the implementation's full structural checker.
 *
 * # Safety
 * `h` must be a live handle or null.
 */
IpqStatus ipq_validate(IpqHandle *h);

/**
 * Snapshot the cost counters into `*out`.
 *
 * # Safety
 * `h` must be a live handle or null; `out` must be writable or null.
 */
IpqStatus ipq_counters(const IpqHandle *h, IpqCounters *out);

/**
 * Zero the cost counters.
 *
 * # Safety
 * `h` must be a live handle or null.
 */
IpqStatus ipq_reset_counters(IpqHandle *h);

/**
 * Copy up to `cap` elements of the raw state into `buf`, returning the full
 * element count. Together with `ipq_from_elements` this supports
 * strict-implicitness round trips across the boundary.
 *
 * # Safety
 * `h` must be a live handle or null; `buf` must have room for `cap` values
 * or be null with `cap == 0`.
 */
uintptr_t ipq_elements(const IpqHandle *h, uint64_t *buf, uintptr_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IPQ_H */
