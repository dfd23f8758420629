#ifndef DBANDIT_H
#define DBANDIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DbanditExploration {
  /**
   * `ln t + 3 ln ln t`
   */
  DBANDIT_EXPLORATION_STANDARD = 0,
  /**
   * `ln(2t)`
   */
  DBANDIT_EXPLORATION_APPROXIMATE = 1,
  /**
   * `M (ln t + 3 ln ln t) / (1 + (M − 1) α)`
   */
  DBANDIT_EXPLORATION_DKLUCB = 2,
} DbanditExploration;

/**
 * Result code of every call.
 */
typedef enum DbanditStatus {
  DBANDIT_STATUS_OK = 0,
  DBANDIT_STATUS_NULL_POINTER = 1,
  DBANDIT_STATUS_INVALID_ARGUMENT = 2,
  DBANDIT_STATUS_DOMAIN_ERROR = 3,
  DBANDIT_STATUS_PARSE_ERROR = 4,
  DBANDIT_STATUS_NOT_APPLICABLE = 5,
  DBANDIT_STATUS_INSUFFICIENT_DATA = 6,
  DBANDIT_STATUS_OUT_OF_RANGE = 7,
  DBANDIT_STATUS_IO_ERROR = 8,
  DBANDIT_STATUS_PANIC = 9,
} DbanditStatus;

typedef enum DbanditUpperBound {
  DBANDIT_UPPER_BOUND_OVER_EXPLORATION = 0,
  DBANDIT_UPPER_BOUND_DENSE_SCHEDULE = 1,
  DBANDIT_UPPER_BOUND_DKLUCB = 2,
} DbanditUpperBound;

/**
 * Opaque Monte Carlo aggregate.
 */
typedef struct DbanditAggregate DbanditAggregate;

/**
 * Opaque parsed experiment.
 */
typedef struct DbanditExperiment DbanditExperiment;

/**
 * Opaque communication schedule.
 */
typedef struct DbanditSchedule DbanditSchedule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *dbandit_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void dbandit_string_free(char *s);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum DbanditStatus dbandit_kl_bernoulli(double p, double q, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum DbanditStatus dbandit_kl_truncated(double p, double q, double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum DbanditStatus dbandit_d_inf_bernoulli(double mu_a, double mu_star, double *out);

/**
 * KL-UCB upper confidence bound for an empirical mean and a budget `𝓕/N`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum DbanditStatus dbandit_klucb_upper_bound(double mean, double budget, double *out);

/**
 * `players` and `alpha` are only read for the DKLUCB variant.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum DbanditStatus dbandit_exploration_value(enum DbanditExploration kind,
                                             uint32_t players,
                                             double alpha,
                                             uint64_t t,
                                             double *out);

/**
 * DKLUCB count prediction `N′` from a player's count and the snapshot.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum DbanditStatus dbandit_count_prediction(uint64_t known_count,
                                            uint64_t snapshot_count,
                                            uint32_t players,
                                            double alpha,
                                            double *out);

/**
 * Parses `none | full | oneshot:<r> | linear:<d> | exp:<q> |
 * doubleexp:<q>,<eps> | explicit:<r1>,<r2>,...`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` valid for writes.
 */
enum DbanditStatus dbandit_schedule_parse(const char *spec, struct DbanditSchedule **out);

/**
 * The one-shot schedule at `⌈T^{1/M}⌉`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum DbanditStatus dbandit_schedule_over_exploration(uint64_t horizon,
                                                     uint32_t players,
                                                     struct DbanditSchedule **out);

/**
 * # Safety
 * `schedule` must be null or a live handle; it is invalid afterwards.
 */
void dbandit_schedule_free(struct DbanditSchedule *schedule);

/**
 * # Safety
 * `schedule` must be a live handle; `out` valid for writes.
 */
enum DbanditStatus dbandit_schedule_is_comm_round(const struct DbanditSchedule *schedule,
                                                  uint64_t t,
                                                  bool *out);

/**
 * `ℓ(t)`: the last communication round at or before `t`, 0 if none.
 *
 * # Safety
 * `schedule` must be a live handle; `out` valid for writes.
 */
enum DbanditStatus dbandit_schedule_last_comm_leq(const struct DbanditSchedule *schedule,
                                                  uint64_t t,
                                                  uint64_t *out);

/**
 * # Safety
 * `schedule` must be a live handle; `out` valid for writes.
 */
enum DbanditStatus dbandit_schedule_counting_function(const struct DbanditSchedule *schedule,
                                                      uint64_t n,
                                                      uint64_t *out);

/**
 * Writes the density and whether it was estimated from a finite list.
 *
 * # Safety
 * `schedule` must be a live handle; both out-pointers valid for writes.
 */
enum DbanditStatus dbandit_schedule_density(const struct DbanditSchedule *schedule,
                                            double *out_value,
                                            bool *out_estimated);

/**
 * Canonical text form; release with [`dbandit_string_free`].
 *
 * # Safety
 * `schedule` must be a live handle.
 */
char *dbandit_schedule_to_string(const struct DbanditSchedule *schedule);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum DbanditStatus dbandit_lower_bound_coefficient(uint32_t players,
                                                   double alpha,
                                                   double mu_a,
                                                   double mu_star,
                                                   double *out);

/**
 * # Safety
 * `out` must be valid for writes.
 */
enum DbanditStatus dbandit_upper_bound_coefficient(enum DbanditUpperBound bound,
                                                   uint32_t players,
                                                   double alpha,
                                                   double mu_a,
                                                   double mu_star,
                                                   double *out);

/**
 * Parses an experiment config document.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` valid for writes.
 */
enum DbanditStatus dbandit_experiment_parse(const char *text, struct DbanditExperiment **out);

/**
 * The built-in `figure1` preset.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum DbanditStatus dbandit_experiment_figure1(struct DbanditExperiment **out);

/**
 * # Safety
 * `experiment` must be null or a live handle; it is invalid afterwards.
 */
void dbandit_experiment_free(struct DbanditExperiment *experiment);

/**
 * # Safety
 * `experiment` must be a live handle.
 */
enum DbanditStatus dbandit_experiment_set_replications(struct DbanditExperiment *experiment,
                                                       uint32_t replications);

/**
 * # Safety
 * `experiment` must be a live handle.
 */
enum DbanditStatus dbandit_experiment_set_seed(struct DbanditExperiment *experiment, uint64_t seed);

/**
 * # Safety
 * `experiment` must be a live handle; `out` valid for writes.
 */
enum DbanditStatus dbandit_experiment_num_strategies(const struct DbanditExperiment *experiment,
                                                     size_t *out);

/**
 * Name of strategy `index`; release with [`dbandit_string_free`]. NULL if
 * the handle is null or the index is out of range.
 *
 * # Safety
 * `experiment` must be a live handle.
 */
char *dbandit_experiment_strategy_name(const struct DbanditExperiment *experiment, size_t index);

/**
 * Runs the Monte Carlo experiment for strategy `index`.
 *
 * # Safety
 * `experiment` must be a live handle; `out` valid for writes.
 */
enum DbanditStatus dbandit_experiment_run(const struct DbanditExperiment *experiment,
                                          size_t index,
                                          struct DbanditAggregate **out);

/**
 * # Safety
 * `aggregate` must be null or a live handle; it is invalid afterwards.
 */
void dbandit_aggregate_free(struct DbanditAggregate *aggregate);

/**
 * # Safety
 * `aggregate` must be a live handle; `out` valid for writes.
 */
enum DbanditStatus dbandit_aggregate_num_checkpoints(const struct DbanditAggregate *aggregate,
                                                     size_t *out);

/**
 * # Safety
 * `aggregate` must be a live handle; `out` valid for writes.
 */
enum DbanditStatus dbandit_aggregate_num_arms(const struct DbanditAggregate *aggregate,
                                              size_t *out);

/**
 * Round of checkpoint `index`.
 *
 * # Safety
 * `aggregate` must be a live handle; `out` valid for writes.
 */
enum DbanditStatus dbandit_aggregate_checkpoint(const struct DbanditAggregate *aggregate,
                                                size_t index,
                                                uint64_t *out);

/**
 * Mean of `N_t(arm)` at checkpoint `index` (arms from 0).
 *
 * # Safety
 * `aggregate` must be a live handle; `out` valid for writes.
 */
enum DbanditStatus dbandit_aggregate_mean(const struct DbanditAggregate *aggregate,
                                          size_t index,
                                          size_t arm,
                                          double *out);

/**
 * # Safety
 * `aggregate` must be a live handle; `out` valid for writes.
 */
enum DbanditStatus dbandit_aggregate_stderr(const struct DbanditAggregate *aggregate,
                                            size_t index,
                                            size_t arm,
                                            double *out);

/**
 * # Safety
 * `aggregate` must be a live handle; `out` valid for writes.
 */
enum DbanditStatus dbandit_aggregate_regret(const struct DbanditAggregate *aggregate,
                                            size_t index,
                                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DBANDIT_H */
