#ifndef ANISO_H
#define ANISO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AnisoStatus {
  ANISO_STATUS_OK = 0,
  ANISO_STATUS_NULL_POINTER = 1,
  ANISO_STATUS_INVALID_ARGUMENT = 2,
  ANISO_STATUS_CONFIG = 3,
  ANISO_STATUS_MODEL = 4,
  ANISO_STATUS_SOLVER = 5,
  /**
   * The run stopped on non-finite values; the partial trajectory is returned.
   */
  ANISO_STATUS_BLOW_UP = 6,
  ANISO_STATUS_KINETIC = 7,
  ANISO_STATUS_DIAGNOSTICS = 8,
  ANISO_STATUS_BUFFER_TOO_SMALL = 9,
  ANISO_STATUS_PANIC = 10,
} AnisoStatus;

/**
 * Verdict of the nondegeneracy check; values match the CLI exit codes.
 */
typedef enum AnisoVerdict {
  ANISO_VERDICT_PASS = 0,
  ANISO_VERDICT_FAIL = 3,
  ANISO_VERDICT_INCONCLUSIVE = 4,
} AnisoVerdict;

/**
 * Parsed experiment configuration.
 */
typedef struct AnisoConfig AnisoConfig;

/**
 * Immutable model; safe to share between threads.
 */
typedef struct AnisoModel AnisoModel;

/**
 * Result of a run.
 */
typedef struct AnisoTrajectory AnisoTrajectory;

/**
 * Callback `S'(ξ)` with user data.
 */
typedef double (*AnisoScalarFn)(double xi, void *user_data);

/**
 * One diagnostics row.
 */
typedef struct AnisoRow {
  double t;
  double mean;
  double l1_to_mean;
  double l2_energy;
  double linf;
  double dissipation_resolved;
  double dissipation_budget;
} AnisoRow;

/**
 * Headline numbers of an audit. `decay_time` is NaN when the decay
 * threshold was not reached.
 */
typedef struct AnisoAudit {
  bool passed;
  double max_principle_violation;
  double energy_monotonicity_violation;
  double contraction_violation;
  double mean_drift;
  double telescoping_error;
  double cumulative_budget;
  double global_budget_bound;
  double decay_time;
} AnisoAudit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, static storage.
 */
const char *aniso_version(void);

/**
 * Message of the last failure on this thread, or null if there was none.
 */
const char *aniso_last_error_message(void);

/**
 * Parses configuration text. All problems are listed in the error message.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum AnisoStatus aniso_config_parse(const char *text, struct AnisoConfig **out);

/**
 * Default configuration for a preset model.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum AnisoStatus aniso_config_for_preset(const char *name, struct AnisoConfig **out);

/**
 * Canonical text of the configuration, NUL-terminated. `*len` receives the
 * required size in bytes including the terminator.
 *
 * # Safety
 * `config` must be a live handle; `buf` must hold `cap` bytes; `len` must be writable.
 */
enum AnisoStatus aniso_config_serialize(const struct AnisoConfig *config,
                                        char *buf,
                                        size_t cap,
                                        size_t *len);

/**
 * # Safety
 * `config` must be null or a handle not yet freed.
 */
void aniso_config_free(struct AnisoConfig *config);

/**
 * One of the named preset models.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum AnisoStatus aniso_model_preset(const char *name, struct AnisoModel **out);

/**
 * The model described by a configuration.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum AnisoStatus aniso_model_from_config(const struct AnisoConfig *config, struct AnisoModel **out);

/**
 * Spatial dimension d and state bound M.
 *
 * # Safety
 * `model` must be a live handle; the outputs must be writable.
 */
enum AnisoStatus aniso_model_info(const struct AnisoModel *model,
                                  size_t *dimension,
                                  double *state_bound);

/**
 * Runs every model check on `samples` points of [−M, M].
 *
 * # Safety
 * `model` must be a live handle; the outputs must be writable.
 */
enum AnisoStatus aniso_model_validate(const struct AnisoModel *model,
                                      size_t samples,
                                      bool *passed,
                                      double *worst_residual);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void aniso_model_free(struct AnisoModel *model);

/**
 * ω(τ, κ; λ) = ∫_{|ξ|≤M} λ / (λ + |τ + a(ξ)·κ|² + (κᵀA(ξ)κ)²) dξ.
 *
 * # Safety
 * `model` must be a live handle; `kappa` must hold `kappa_len` values.
 */
enum AnisoStatus aniso_omega_at(const struct AnisoModel *model,
                                double tau,
                                const double *kappa,
                                size_t kappa_len,
                                double lambda,
                                double *out);

/**
 * S(u) − S(0) = ∫ S'(ξ) χ(ξ; u) dξ over [−M, M].
 *
 * # Safety
 * `s_prime` must be callable with `user_data`; `out` must be writable.
 */
enum AnisoStatus aniso_entropy_from_kinetic(AnisoScalarFn s_prime,
                                            void *user_data,
                                            double u,
                                            double state_bound,
                                            double *out);

/**
 * Runs the check described by the `[condition]` section on the model of
 * the configuration. `omega_floor` receives ω at the smallest λ.
 *
 * # Safety
 * `config` must be a live handle; the outputs must be writable.
 */
enum AnisoStatus aniso_check_condition(const struct AnisoConfig *config,
                                       enum AnisoVerdict *verdict,
                                       double *omega_floor);

/**
 * Cell averages of the configured initial profile, in storage order.
 *
 * # Safety
 * `config` must be a live handle; `buf` must hold `cap` values; `len` must be writable.
 */
enum AnisoStatus aniso_initial_field(const struct AnisoConfig *config,
                                     double *buf,
                                     size_t cap,
                                     size_t *len);

/**
 * Simulates the configured experiment. Nothing is written to disk. On
 * `ANISO_STATUS_BLOW_UP`, `*out` holds the trajectory up to the failure.
 *
 * # Safety
 * `config` must be a live handle; `out` must be writable.
 */
enum AnisoStatus aniso_run(const struct AnisoConfig *config, struct AnisoTrajectory **out);

/**
 * Number of diagnostics rows.
 *
 * # Safety
 * `trajectory` must be a live handle; `count` must be writable.
 */
enum AnisoStatus aniso_trajectory_row_count(const struct AnisoTrajectory *trajectory,
                                            size_t *count);

/**
 * # Safety
 * `trajectory` must be a live handle; `row` must be writable.
 */
enum AnisoStatus aniso_trajectory_row(const struct AnisoTrajectory *trajectory,
                                      size_t index,
                                      struct AnisoRow *row);

/**
 * Final cell values in storage order.
 *
 * # Safety
 * `trajectory` must be a live handle; `buf` must hold `cap` values; `len` must be writable.
 */
enum AnisoStatus aniso_trajectory_final_field(const struct AnisoTrajectory *trajectory,
                                              double *buf,
                                              size_t cap,
                                              size_t *len);

/**
 * Audits the trajectory with default tolerances. `state_bound` scales the
 * budget tolerance; pass 0 to use ‖u₀‖_∞.
 *
 * # Safety
 * `trajectory` must be a live handle; `out` must be writable.
 */
enum AnisoStatus aniso_trajectory_audit(const struct AnisoTrajectory *trajectory,
                                        double state_bound,
                                        struct AnisoAudit *out);

/**
 * # Safety
 * `trajectory` must be null or a handle not yet freed.
 */
void aniso_trajectory_free(struct AnisoTrajectory *trajectory);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANISO_H */
