#ifndef EHMMSE_H
#define EHMMSE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EhStatus {
  EH_STATUS_OK = 0,
  EH_STATUS_INVALID_ARGUMENT = 1,
  EH_STATUS_NULL_POINTER = 2,
  EH_STATUS_NOT_STATIONARY = 3,
  EH_STATUS_NUMERICAL = 4,
  EH_STATUS_PANIC = 5,
} EhStatus;

typedef enum EhTail {
  EH_TAIL_BT = 0,
  EH_TAIL_BN = 1,
} EhTail;

typedef enum EhFamily {
  EH_FAMILY_I = 0,
  EH_FAMILY_II = 1,
  EH_FAMILY_I_EQUIDISTANT = 2,
} EhFamily;

/**
 * Opaque arrival model.
 */
typedef struct EhArrivalModel EhArrivalModel;

/**
 * Opaque signal model.
 */
typedef struct EhSignalModel EhSignalModel;

/**
 * Mirror of a bound point; `gamma` and `p_bar` are NaN outside Bound II.
 */
typedef struct EhBoundPoint {
  enum EhFamily family;
  enum EhTail tail;
  double err_bound;
  double prob_lower;
  double raw_prob;
  double r;
  double gamma;
  double mu;
  double rho;
  double p_bar;
  bool degenerate;
} EhBoundPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *eh_last_error_message(void);

/**
 * Library version, a static NUL-terminated string.
 */
const char *eh_version(void);

/**
 * Low-pass c.w.s.s. model (first `s` DFT columns).
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum EhStatus eh_signal_lowpass_new(size_t n,
                                    size_t s,
                                    double power,
                                    double noise_var,
                                    struct EhSignalModel **out_model);

/**
 * Model from explicit orthonormal columns, `n x s`, column-major real and
 * imaginary parts.
 *
 * # Safety
 * `re` and `im` must each hold `n * s` doubles; `out_model` must be writable.
 */
enum EhStatus eh_signal_columns_new(size_t n,
                                    size_t s,
                                    const double *re,
                                    const double *im,
                                    double power,
                                    double noise_var,
                                    struct EhSignalModel **out_model);

/**
 * # Safety
 * `model` must come from a signal constructor (or be NULL) and not be used afterwards.
 */
void eh_signal_free(struct EhSignalModel *model);

/**
 * Row-norm coherence `(eta_L, eta_U)`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum EhStatus eh_signal_eta(const struct EhSignalModel *model,
                            double *eta_lower,
                            double *eta_upper);

/**
 * # Safety
 * `out_model` must be writable.
 */
enum EhStatus eh_arrival_bernoulli_new(double p, double e0, struct EhArrivalModel **out_model);

/**
 * Packets uniform on `[0, e_u]`.
 *
 * # Safety
 * `out_model` must be writable.
 */
enum EhStatus eh_arrival_uniform_new(double e_u, struct EhArrivalModel **out_model);

/**
 * # Safety
 * `out_model` must be writable.
 */
enum EhStatus eh_arrival_deterministic_new(double e, struct EhArrivalModel **out_model);

/**
 * # Safety
 * `model` must come from an arrival constructor (or be NULL) and not be used afterwards.
 */
void eh_arrival_free(struct EhArrivalModel *model);

/**
 * Mean, variance, peak packet energy and peak-to-mean ratio.
 *
 * # Safety
 * All pointers must be valid.
 */
enum EhStatus eh_arrival_stats(const struct EhArrivalModel *model,
                               double *mean,
                               double *variance,
                               double *e_max,
                               double *peak_ratio);

/**
 * `P(slot energy >= threshold)`; `std_error` is 0 for exact results.
 *
 * # Safety
 * All pointers must be valid.
 */
enum EhStatus eh_slot_tail_probability(const struct EhArrivalModel *model,
                                       size_t q,
                                       double threshold,
                                       double *value,
                                       double *std_error);

/**
 * MMSE for the gain diagonal `diag` of length `N`.
 *
 * # Safety
 * `diag` must hold `len` doubles; `mmse` must be writable.
 */
enum EhStatus eh_mmse_closed_form(const struct EhSignalModel *model,
                                  const double *diag,
                                  size_t len,
                                  double *mmse);

/**
 * Block gains `p_k = E_k / S_k` for `N / q` slot energies.
 *
 * # Safety
 * `energies` and `gains` must each hold `n_slots` doubles.
 */
enum EhStatus eh_gains_block(const struct EhSignalModel *model,
                             size_t q,
                             const double *energies,
                             double *gains,
                             size_t n_slots);

/**
 * Bound I, `r in (0, 1/eta_U]`.
 *
 * # Safety
 * Handles must be valid; `point` must be writable.
 */
enum EhStatus eh_bound_i(const struct EhSignalModel *model,
                         const struct EhArrivalModel *arrivals,
                         size_t q,
                         double r,
                         enum EhTail tail,
                         struct EhBoundPoint *point);

/**
 * Bound II, `r in (0, 1/eta_U]`, `gamma in [0, q r_E]`.
 *
 * # Safety
 * Handles must be valid; `point` must be writable.
 */
enum EhStatus eh_bound_ii(const struct EhSignalModel *model,
                          const struct EhArrivalModel *arrivals,
                          size_t q,
                          double r,
                          double gamma,
                          enum EhTail tail,
                          struct EhBoundPoint *point);

/**
 * Equidistant bound for low-pass c.w.s.s. models, `r in (0, 1]`.
 *
 * # Safety
 * Handles must be valid; `point` must be writable.
 */
enum EhStatus eh_bound_equidistant(const struct EhSignalModel *model,
                                   const struct EhArrivalModel *arrivals,
                                   double r,
                                   enum EhTail tail,
                                   struct EhBoundPoint *point);

/**
 * Offline optimum `P_x / (1 + e_tot / (s sigma_w^2))`.
 *
 * # Safety
 * `model` must be valid; `eps` must be writable.
 */
enum EhStatus eh_offline_benchmark(const struct EhSignalModel *model, double e_tot, double *eps);

/**
 * Block-transmission campaign; per-trial MMSE values go to `errors`
 * (`n_trials` doubles) and the fraction with `eps <= threshold` to
 * `success_probability`.
 *
 * # Safety
 * Handles must be valid; `errors` must hold `n_trials` doubles.
 */
enum EhStatus eh_run_campaign(const struct EhSignalModel *model,
                              const struct EhArrivalModel *arrivals,
                              size_t q,
                              size_t n_trials,
                              double threshold,
                              uint64_t seed,
                              double *errors,
                              double *success_probability);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EHMMSE_H */
