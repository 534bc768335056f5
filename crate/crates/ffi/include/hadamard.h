#ifndef HADAMARD_H
#define HADAMARD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HmStatus {
  HM_STATUS_OK = 0,
  HM_STATUS_NULL_POINTER = 1,
  HM_STATUS_INVALID_INPUT = 2,
  HM_STATUS_BACKEND_MISMATCH = 3,
  HM_STATUS_PARSE = 4,
  HM_STATUS_TAXA_MISMATCH = 5,
  HM_STATUS_LEAF_GUARD = 6,
  HM_STATUS_IO = 7,
  HM_STATUS_PANIC = 8,
} HmStatus;

/**
 * Iteration scheme of the mean and median solvers.
 */
typedef enum HmAlgorithm {
  HM_ALGORITHM_CYCLIC = 0,
  HM_ALGORITHM_RANDOM = 1,
  /**
   * Law-of-large-numbers estimator (means only).
   */
  HM_ALGORITHM_LLN = 2,
} HmAlgorithm;

/**
 * A point of some space.
 */
typedef struct HmPoint HmPoint;

/**
 * A space handle, plus the taxon labels of a tree space.
 */
typedef struct HmSpace HmSpace;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *hm_last_error(void);

/**
 * Creates a space from a descriptor such as `euclidean:2`, `spider:3`,
 * `spd:3` or `bhv:5` (tree-space taxa are then named `t0`, `t1`, ...).
 *
 * # Safety
 * `descriptor` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HmStatus hm_space_new(const char *descriptor, struct HmSpace **out);

/**
 * Creates a tree space over the given taxon labels.
 *
 * # Safety
 * `labels` must point to `count` NUL-terminated strings.
 */
enum HmStatus hm_space_new_bhv(const char *const *labels, uintptr_t count, struct HmSpace **out);

/**
 * # Safety
 * `space` must come from `hm_space_new*` and not be used afterwards.
 */
void hm_space_free(struct HmSpace *space);

/**
 * # Safety
 * `space` must be valid and `coords` must hold `len` doubles.
 */
enum HmStatus hm_point_euclidean(const struct HmSpace *space,
                                 const double *coords,
                                 uintptr_t len,
                                 struct HmPoint **out);

/**
 * # Safety
 * `space` must be valid.
 */
enum HmStatus hm_point_spider(const struct HmSpace *space,
                              uintptr_t ray,
                              double radius,
                              struct HmPoint **out);

/**
 * A symmetric positive definite matrix from `len = n*n` row-major entries.
 *
 * # Safety
 * `space` must be valid and `values` must hold `len` doubles.
 */
enum HmStatus hm_point_spd(const struct HmSpace *space,
                           const double *values,
                           uintptr_t len,
                           struct HmPoint **out);

/**
 * Parses a point in the JSON encoding of the command-line tool: an array for
 * Euclidean points, `{"ray": r, "radius": x}` for spider points, a
 * row-major matrix for SPD points and a Newick string (bare or quoted) for
 * trees.
 *
 * # Safety
 * `space` must be valid and `json` NUL-terminated.
 */
enum HmStatus hm_point_from_json(const struct HmSpace *space,
                                 const char *json,
                                 struct HmPoint **out);

/**
 * Encodes a point as JSON; release the string with `hm_string_free`.
 *
 * # Safety
 * `space` and `point` must be valid.
 */
enum HmStatus hm_point_to_json(const struct HmSpace *space,
                               const struct HmPoint *point,
                               char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void hm_string_free(char *s);

/**
 * # Safety
 * `point` must come from this library and not be used afterwards.
 */
void hm_point_free(struct HmPoint *point);

/**
 * # Safety
 * All handles must be valid and `out` writable.
 */
enum HmStatus hm_distance(const struct HmSpace *space,
                          const struct HmPoint *p,
                          const struct HmPoint *q,
                          double *out);

/**
 * The point `(1-t) p ⊕ t q`.
 *
 * # Safety
 * All handles must be valid and `out` writable.
 */
enum HmStatus hm_geodesic(const struct HmSpace *space,
                          const struct HmPoint *p,
                          const struct HmPoint *q,
                          double t,
                          struct HmPoint **out);

/**
 * Weighted Fréchet mean of `count` anchors, started at the first one.
 * `weights` may be null for uniform weights; `budget` counts cycles (cyclic)
 * or steps (random, lln); `objective` may be null.
 *
 * # Safety
 * `anchors` must point to `count` valid point handles and `weights`, when
 * not null, to `count` doubles.
 */
enum HmStatus hm_frechet_mean(const struct HmSpace *space,
                              const struct HmPoint *const *anchors,
                              const double *weights,
                              uintptr_t count,
                              enum HmAlgorithm algorithm,
                              uint64_t budget,
                              uint64_t seed,
                              struct HmPoint **out,
                              double *objective);

/**
 * Weighted geometric median; arguments as for `hm_frechet_mean`, except
 * that `HM_ALGORITHM_LLN` is rejected.
 *
 * # Safety
 * As for `hm_frechet_mean`.
 */
enum HmStatus hm_geometric_median(const struct HmSpace *space,
                                  const struct HmPoint *const *anchors,
                                  const double *weights,
                                  uintptr_t count,
                                  enum HmAlgorithm algorithm,
                                  uint64_t budget,
                                  uint64_t seed,
                                  struct HmPoint **out,
                                  double *objective);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HADAMARD_H */
