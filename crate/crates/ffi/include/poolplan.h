#ifndef POOLPLAN_H
#define POOLPLAN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
enum PoolplanStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  POOLPLAN_STATUS_OK = 0,
  POOLPLAN_STATUS_NULL_POINTER = 1,
  POOLPLAN_STATUS_INVALID_PREVALENCE = 2,
  POOLPLAN_STATUS_INVALID_POOL_SIZE = 3,
  POOLPLAN_STATUS_INVALID_MULTIPLICITY = 4,
  POOLPLAN_STATUS_LAMBERT_DOMAIN = 5,
  POOLPLAN_STATUS_NO_INTERIOR_OPTIMUM = 6,
  POOLPLAN_STATUS_EMPTY_RANGE = 7,
  POOLPLAN_STATUS_INVALID_BOUNDS = 8,
  POOLPLAN_STATUS_OUT_OF_RANGE = 9,
  POOLPLAN_STATUS_NOT_ATTAINED = 10,
  POOLPLAN_STATUS_INVALID_CONFIG = 11,
  POOLPLAN_STATUS_PANIC = 99,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum PoolplanStatus PoolplanStatus;
#else
typedef int32_t PoolplanStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

/**
 * Opaque simulation configuration.
 */
typedef struct PoolplanSimConfig PoolplanSimConfig;

/**
 * Opaque simulation result.
 */
typedef struct PoolplanSimReport PoolplanSimReport;

/**
 * Optimal plan for one multiplicity. `s_continuous` is NaN when
 * `has_continuous` is false.
 */
typedef struct PoolplanPlan {
  uint32_t k;
  uint32_t s_integer;
  bool has_continuous;
  double s_continuous;
  double expected_cost;
  double baseline_cost;
  bool beneficial;
  bool cap_binding;
} PoolplanPlan;

typedef struct PoolplanTrialOutcome {
  uint64_t trial_index;
  uint64_t pool_tests;
  uint64_t individual_retests;
  uint64_t total_tests;
  uint64_t positives;
  uint64_t detected_positives;
  uint64_t missed_positives;
  uint64_t suspect_negatives;
} PoolplanTrialOutcome;

/**
 * Aggregated simulation statistics. Optional values are NaN when their
 * `has_` flag is false.
 */
typedef struct PoolplanSimSummary {
  uint64_t trials;
  double mean_tests_per_patient;
  bool has_std_error;
  double std_error;
  double mean_total_tests;
  bool has_analytic_cost;
  double analytic_cost;
  double empirical_sensitivity;
  uint64_t total_positives;
  uint64_t total_detected;
  uint64_t total_missed;
} PoolplanSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string. Do not free.
 */
const char *poolplan_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes). Returns the full message length, 0 if none.
 *
 * # Safety
 * `buf` must be NULL or point to at least `len` writable bytes.
 */
size_t poolplan_last_error(char *buf, size_t len);

/**
 * Single-pooling expected tests per patient.
 */
PoolplanStatus poolplan_single_pool_cost(double p, uint32_t s, double *out);

PoolplanStatus poolplan_double_pool_cost(double p, uint32_t s, double *out);

PoolplanStatus poolplan_k_pool_cost(double p, uint32_t k, uint32_t s, double *out);

/**
 * Derivative of the expected cost with respect to a real-valued pool size.
 */
PoolplanStatus poolplan_cost_derivative(double p, uint32_t k, double s, double *out);

PoolplanStatus poolplan_lambert_w0(double x, double *out);

PoolplanStatus poolplan_continuous_optimum(double p, uint32_t k, uint32_t s_max, double *out);

/**
 * Integer optimum over `[2, cap]`; `practical_cap = 0` means no cap.
 */
PoolplanStatus poolplan_integer_optimum(double p,
                                        uint32_t k,
                                        uint32_t s_max,
                                        uint32_t practical_cap,
                                        struct PoolplanPlan *out);

PoolplanStatus poolplan_savings_percent(double p, uint32_t s_max, double *out);

PoolplanStatus poolplan_find_p_for_continuous_s1(double s_target, double *out);

PoolplanStatus poolplan_find_savings_crossover(double threshold_percent,
                                               uint32_t s_max,
                                               double grid_step,
                                               double *out);

PoolplanStatus poolplan_pooling_breakeven(uint32_t k, uint32_t s_max, double *out);

/**
 * New config with Bernoulli(`p`) infections, one trial, seed 0, no pool
 * false negatives. Validation happens when it is run.
 */
PoolplanStatus poolplan_sim_config_new_bernoulli(size_t n,
                                                 double p,
                                                 uint32_t k,
                                                 size_t s,
                                                 struct PoolplanSimConfig **out);

/**
 * New config with exactly `m` infected patients.
 */
PoolplanStatus poolplan_sim_config_new_fixed(size_t n,
                                             size_t m,
                                             uint32_t k,
                                             size_t s,
                                             struct PoolplanSimConfig **out);

PoolplanStatus poolplan_sim_config_set_trials(struct PoolplanSimConfig *cfg, size_t trials);

PoolplanStatus poolplan_sim_config_set_seed(struct PoolplanSimConfig *cfg, uint64_t seed);

PoolplanStatus poolplan_sim_config_set_fn_rate(struct PoolplanSimConfig *cfg, double rate);

/**
 * # Safety
 * `cfg` must be NULL or a handle from `poolplan_sim_config_new_*` not yet freed.
 */
void poolplan_sim_config_free(struct PoolplanSimConfig *cfg);

PoolplanStatus poolplan_run_trial(const struct PoolplanSimConfig *cfg,
                                  uint64_t trial_index,
                                  struct PoolplanTrialOutcome *out);

/**
 * Runs every trial. The report handle must be freed with
 * `poolplan_sim_report_free`.
 */
PoolplanStatus poolplan_sim_run(const struct PoolplanSimConfig *cfg,
                                struct PoolplanSimReport **out);

/**
 * # Safety
 * `report` must be NULL or a live handle from `poolplan_sim_run`.
 */
PoolplanStatus poolplan_sim_report_summary(const struct PoolplanSimReport *report,
                                           struct PoolplanSimSummary *out);

/**
 * # Safety
 * `report` must be NULL or a handle from `poolplan_sim_run` not yet freed.
 */
void poolplan_sim_report_free(struct PoolplanSimReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POOLPLAN_H */
