#ifndef SAWMARK_H
#define SAWMARK_H

/* Generated from the Rust sources by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible library call.
 */
typedef enum SawmarkStatus {
  /**
   * The call succeeded.
   */
  SAWMARK_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  SAWMARK_STATUS_NULL_POINTER = 1,
  /**
   * An argument was out of range or otherwise invalid.
   */
  SAWMARK_STATUS_INVALID_ARGUMENT = 2,
  /**
   * Two related buffers disagreed about their length.
   */
  SAWMARK_STATUS_LENGTH_MISMATCH = 3,
  /**
   * A site's channel variance vanished where it must not.
   */
  SAWMARK_STATUS_DEGENERATE_CHANNEL = 4,
  /**
   * Every site was erased; nothing carries the message.
   */
  SAWMARK_STATUS_NO_WATERMARK_ENERGY = 5,
  /**
   * A requested distortion budget is outside the attainable range.
   */
  SAWMARK_STATUS_INFEASIBLE_BUDGET = 6,
  /**
   * A closed form was evaluated outside its regime.
   */
  SAWMARK_STATUS_REGIME_MISMATCH = 7,
  /**
   * A configuration value could not be applied.
   */
  SAWMARK_STATUS_CONFIG = 8,
  /**
   * An image was malformed or unsupported.
   */
  SAWMARK_STATUS_IMAGE = 9,
  /**
   * The underlying I/O operation failed.
   */
  SAWMARK_STATUS_IO = 10,
  /**
   * The library caught an internal panic.
   */
  SAWMARK_STATUS_PANIC = 11,
} SawmarkStatus;

/**
 * Per-site weighting rule for the perceptual distortion measure.
 */
typedef enum SawmarkWeightRule {
  /**
   * Every site weighs 1.
   */
  SAWMARK_WEIGHT_RULE_UNIT = 0,
  /**
   * Weight decays with the site scale as `(1 + sigma)^(-1/2)`.
   */
  SAWMARK_WEIGHT_RULE_PERCEPTUAL = 1,
} SawmarkWeightRule;

/**
 * Attacker regime reported alongside optimal strengths.
 */
typedef enum SawmarkRegime {
  /**
   * The attacker erases the site.
   */
  SAWMARK_REGIME_ERASE = 0,
  /**
   * The attacker applies the Wiener gain with no extra noise.
   */
  SAWMARK_REGIME_WIENER = 1,
  /**
   * The attacker mixes partial gain with additive noise.
   */
  SAWMARK_REGIME_INTERMEDIATE = 2,
  /**
   * No closed-form regime applies (for example, an unmarked site).
   */
  SAWMARK_REGIME_CUSTOM = 3,
} SawmarkRegime;

/**
 * Opaque handle over a site population (scales and weights).
 */
typedef struct SawmarkModel SawmarkModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *sawmark_version(void);

/**
 * Copy the current thread's last error message into `buffer`.
 *
 * Returns the full message length in bytes (excluding the terminator).
 * The copied portion is always NUL-terminated when `capacity > 0`. A
 * return of 0 means no error has been recorded on this thread.
 */
size_t sawmark_last_error(char *buffer, size_t capacity);

/**
 * Create a site population from `len` per-site scales and weights.
 *
 * `phi` may be null, which assigns unit weights. The handle must be
 * released with `sawmark_model_free`.
 */
enum SawmarkStatus sawmark_model_new(const double *sigma_x,
                                     const double *phi,
                                     size_t len,
                                     struct SawmarkModel **out_model);

/**
 * Release a model handle. Null is ignored.
 */
void sawmark_model_free(struct SawmarkModel *model);

/**
 * Number of sites in the model.
 */
enum SawmarkStatus sawmark_model_len(const struct SawmarkModel *model, size_t *out_len);

/**
 * Recompute the model's weights from its scales under `rule`.
 */
enum SawmarkStatus sawmark_model_set_weights(struct SawmarkModel *model,
                                             enum SawmarkWeightRule rule);

/**
 * Draw one host realization into `out_host` (length = model sites).
 */
enum SawmarkStatus sawmark_gen_host(const struct SawmarkModel *model,
                                    uint64_t seed,
                                    double *out_host);

/**
 * Embed an `n`-bit message (entries ±1) into the host `x`.
 *
 * `x`, `alpha`, and `out_marked` all have one entry per model site.
 */
enum SawmarkStatus sawmark_embed(const struct SawmarkModel *model,
                                 const double *x,
                                 const double *alpha,
                                 const int8_t *bits,
                                 size_t n,
                                 uint64_t code_seed,
                                 bool postfilter,
                                 double *out_marked);

/**
 * Expected weighted embedding distortion for the given strengths.
 */
enum SawmarkStatus sawmark_embedding_distortion(const struct SawmarkModel *model,
                                                const double *alpha,
                                                size_t n,
                                                bool postfilter,
                                                double *out_distortion);

/**
 * Game-optimal marking strength for one site.
 *
 * `out_regime` receives the attacker's best-response regime at that
 * strength; it may be null if only the strength is wanted.
 */
enum SawmarkStatus sawmark_optimal_alpha(double lambda,
                                         double chi,
                                         double phi,
                                         double sigma_x,
                                         size_t n,
                                         bool postfilter,
                                         double *out_alpha,
                                         enum SawmarkRegime *out_regime);

/**
 * Attacker's best response to the given strengths at multiplier `lambda`.
 *
 * Writes per-site gains and noise scales (standard deviations).
 */
enum SawmarkStatus sawmark_optimal_attack(const struct SawmarkModel *model,
                                          const double *alpha,
                                          double lambda,
                                          size_t n,
                                          double *out_gamma,
                                          double *out_sigma_delta);

/**
 * Apply a gain-and-noise channel to `len` values.
 *
 * `gamma` and `sigma_delta` are per-value gains and noise standard
 * deviations; the noise is reproducible from `noise_seed`.
 */
enum SawmarkStatus sawmark_apply_attack(const double *values,
                                        const double *gamma,
                                        const double *sigma_delta,
                                        size_t len,
                                        uint64_t noise_seed,
                                        double *out_attacked);

/**
 * Expected weighted distortion between the original host and the attacked
 * signal under the given channel.
 */
enum SawmarkStatus sawmark_attack_distortion(const struct SawmarkModel *model,
                                             const double *alpha,
                                             const double *gamma,
                                             const double *sigma_delta,
                                             size_t n,
                                             double *out_distortion);

/**
 * Decode `n` bits from a received signal.
 *
 * `gamma` and `sigma_delta` describe the channel the decoder assumes; pass
 * null for both to assume no attack. `out_soft`, `out_hard` (each length
 * `n`), `out_sigma_b_sq`, and `out_eb_n0` are optional individually —
 * null skips that output.
 */
enum SawmarkStatus sawmark_map_decode(const struct SawmarkModel *model,
                                      const double *received,
                                      const double *alpha,
                                      const double *gamma,
                                      const double *sigma_delta,
                                      size_t n,
                                      uint64_t code_seed,
                                      double *out_soft,
                                      int8_t *out_hard,
                                      double *out_sigma_b_sq,
                                      double *out_eb_n0);

/**
 * Solve the per-site marking game at fixed multipliers.
 *
 * Writes per-site optimal strengths; `out_gamma`, `out_sigma_delta_sq`
 * (the attacker's response), and `out_eb_n0` may each be null.
 */
enum SawmarkStatus sawmark_equilibrium(const struct SawmarkModel *model,
                                       double lambda,
                                       double chi,
                                       size_t n,
                                       bool postfilter,
                                       double *out_alpha,
                                       double *out_gamma,
                                       double *out_sigma_delta_sq,
                                       double *out_eb_n0);

/**
 * Calibrate the game multipliers to distortion budgets, then solve.
 *
 * Writes the resolved multipliers; `out_alpha` (length = model sites) and
 * `out_eb_n0` may be null.
 */
enum SawmarkStatus sawmark_calibrate(const struct SawmarkModel *model,
                                     size_t n,
                                     double d_xy_max,
                                     double d_xy_prime_max,
                                     bool postfilter,
                                     double *out_lambda,
                                     double *out_chi,
                                     double *out_alpha,
                                     double *out_eb_n0);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SAWMARK_H */
