#ifndef AUCMON_H
#define AUCMON_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  AUCMON_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  AUCMON_STATUS_NULL_POINTER = 1,
  /**
   * A score was NaN or infinite.
   */
  AUCMON_STATUS_INVALID_SCORE = 2,
  /**
   * The batch has no positives or no negatives; AUC is undefined.
   */
  AUCMON_STATUS_DEGENERATE_BATCH = 3,
  /**
   * A filter input was out of domain (bad variance, zero counts, ...).
   */
  AUCMON_STATUS_INVALID_INPUT = 4,
  /**
   * A snapshot string was not valid UTF-8 or not parseable.
   */
  AUCMON_STATUS_MALFORMED_SNAPSHOT = 5,
} AucmonStatus;

/**
 * Which dispersion components the `(1 - gain)` shrinkage applies to.
 */
typedef enum {
  /**
   * Shrink the carried state components; gains decay toward zero.
   */
  AUCMON_STRATEGY_CARRIED_STATE = 0,
  /**
   * Shrink the incoming window's own components (library default).
   */
  AUCMON_STRATEGY_WINDOW_SAMPLE = 1,
} AucmonStrategy;

/**
 * Opaque set of scored positives and negatives.
 */
typedef struct AucmonBatch AucmonBatch;

/**
 * Opaque carried filter state.
 */
typedef struct AucmonFilter AucmonFilter;

/**
 * AUC estimate with its DeLong variance decomposition.
 */
typedef struct {
  double theta;
  double s10;
  double s01;
  double variance;
  uintptr_t m;
  uintptr_t n;
  /**
   * Nonzero when the imbalance-aware bound replaced the sample variance.
   */
  bool used_upper_bound;
} AucmonEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a batch from score arrays. On success `*out` owns the handle;
 * release it with `aucmon_batch_free`.
 *
 * # Safety
 * `positives`/`negatives` must point to `m`/`n` readable doubles (null is
 * allowed only with length 0) and `out` must be a valid pointer.
 */
AucmonStatus aucmon_batch_new(const double *positives,
                              uintptr_t m,
                              const double *negatives,
                              uintptr_t n,
                              AucmonBatch **out);

/**
 * Releases a batch handle. Null is a no-op.
 *
 * # Safety
 * `batch` must be a handle from `aucmon_batch_new` not yet freed.
 */
void aucmon_batch_free(AucmonBatch *batch);

/**
 * Mann-Whitney AUCROC of the batch, ties counting one half.
 *
 * # Safety
 * `batch` must be a live handle and `out` a valid pointer.
 */
AucmonStatus aucmon_batch_auc(const AucmonBatch *batch, double *out);

/**
 * DeLong estimate; batches with `m <= min_positives` (or fewer than two
 * samples in either class) report the `1/m + 1/n` bound instead of the
 * sample variance.
 *
 * # Safety
 * `batch` must be a live handle and `out` a valid pointer.
 */
AucmonStatus aucmon_batch_delong(const AucmonBatch *batch,
                                 uintptr_t min_positives,
                                 AucmonEstimate *out);

/**
 * The distribution-free variance bound `1/m + 1/n`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
AucmonStatus aucmon_variance_upper_bound(uintptr_t m, uintptr_t n, double *out);

/**
 * 95% confidence interval around `mean`, clipped to [0, 1].
 *
 * # Safety
 * `low` and `high` must be valid pointers.
 */
AucmonStatus aucmon_confidence_interval(double mean, double variance, double *low, double *high);

/**
 * Seeds a filter from a baseline estimate (identity initialization). On
 * success `*out` owns the handle; release it with `aucmon_filter_free`.
 *
 * # Safety
 * `baseline` and `out` must be valid pointers.
 */
AucmonStatus aucmon_filter_new(const AucmonEstimate *baseline, AucmonFilter **out);

/**
 * Releases a filter handle. Null is a no-op.
 *
 * # Safety
 * `filter` must be a handle from this library not yet freed.
 */
void aucmon_filter_free(AucmonFilter *filter);

/**
 * Advances the filter by one windowed observation, updating the handle in
 * place. `gain` may be null if the gain is not wanted.
 *
 * # Safety
 * `filter` must be a live handle and `observation` a valid pointer.
 */
AucmonStatus aucmon_filter_step(AucmonFilter *filter,
                                const AucmonEstimate *observation,
                                AucmonStrategy strategy,
                                double *gain);

/**
 * Reads the filtered mean and posterior variance without advancing.
 *
 * # Safety
 * `filter` must be a live handle; `theta` and `variance` must be valid.
 */
AucmonStatus aucmon_filter_state(const AucmonFilter *filter, double *theta, double *variance);

/**
 * Serializes the filter as a `key=value` snapshot. The returned string
 * must be released with `aucmon_string_free`.
 *
 * # Safety
 * `filter` must be a live handle and `out` a valid pointer.
 */
AucmonStatus aucmon_filter_snapshot(const AucmonFilter *filter, char **out);

/**
 * Restores a filter from a snapshot produced by `aucmon_filter_snapshot`.
 *
 * # Safety
 * `snapshot` must be a NUL-terminated string and `out` a valid pointer.
 */
AucmonStatus aucmon_filter_from_snapshot(const char *snapshot, AucmonFilter **out);

/**
 * Frees a string returned by this library. Null is a no-op.
 *
 * # Safety
 * `s` must come from `aucmon_filter_snapshot` and not be freed twice.
 */
void aucmon_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* AUCMON_H */
