/* Generated by cbindgen from crates/ffi/src; do not edit. */

#ifndef RRDPS_H
#define RRDPS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RrdpsStatus {
  RRDPS_STATUS_OK = 0,
  RRDPS_STATUS_NULL_POINTER = 1,
  RRDPS_STATUS_DOMAIN = 2,
  RRDPS_STATUS_INDEX = 3,
  RRDPS_STATUS_VALIDATION = 4,
  RRDPS_STATUS_DEGENERATE = 5,
  RRDPS_STATUS_INFEASIBLE = 6,
  RRDPS_STATUS_SOLVER = 7,
  RRDPS_STATUS_PARSE = 8,
  RRDPS_STATUS_IO = 9,
  RRDPS_STATUS_PANIC = 10,
  /**
   * Output buffer too small; the required length was written.
   */
  RRDPS_STATUS_BUFFER_TOO_SMALL = 11,
} RrdpsStatus;

typedef enum RrdpsProtocol {
  RRDPS_PROTOCOL_DD_RRDPS = 0,
  RRDPS_PROTOCOL_PASSIVE_RRDPS = 1,
  RRDPS_PROTOCOL_BB84_DECOY = 2,
} RrdpsProtocol;

/**
 * Result of a distance scan.
 */
typedef struct RrdpsScan RrdpsScan;

/**
 * Protocol, channel, detector and optimizer settings.
 */
typedef struct RrdpsScenario RrdpsScenario;

/**
 * One operating point. `g_min` is NaN for protocols without a photon bound.
 */
typedef struct RrdpsPoint {
  double distance;
  double mu_opt;
  uint32_t v_th_opt;
  double gain;
  double qber;
  double g_min;
  double e_src;
  double rate_raw;
  double rate_clamped;
  bool no_positive_rate;
} RrdpsPoint;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *rrdps_last_error(void);

/**
 * Scenario with the simulation defaults for `protocol` and `pulses`.
 *
 * # Safety
 * `out_scenario` must be null or valid for writes.
 */
enum RrdpsStatus rrdps_scenario_new_table1(enum RrdpsProtocol protocol,
                                           uint32_t pulses,
                                           struct RrdpsScenario **out_scenario);

/**
 * # Safety
 * `scenario` must be null or come from [`rrdps_scenario_new_table1`] and not be freed yet.
 */
void rrdps_scenario_free(struct RrdpsScenario *scenario);

/**
 * Misalignment error probability. Invalid values leave the scenario unchanged.
 *
 * # Safety
 * `scenario` must be a live handle or null.
 */
enum RrdpsStatus rrdps_scenario_set_misalignment(struct RrdpsScenario *scenario, double e_d);

/**
 * # Safety
 * `scenario` must be a live handle or null.
 */
enum RrdpsStatus rrdps_scenario_set_fiber_loss(struct RrdpsScenario *scenario,
                                               double beta_db_per_km);

/**
 * # Safety
 * `scenario` must be a live handle or null.
 */
enum RrdpsStatus rrdps_scenario_set_detector(struct RrdpsScenario *scenario,
                                             double eta_d,
                                             double p_d);

/**
 * Attenuator settings, strictly decreasing in (0, 1].
 *
 * # Safety
 * `scenario` must be a live handle or null; `settings` must point to `len` doubles.
 */
enum RrdpsStatus rrdps_scenario_set_decoys(struct RrdpsScenario *scenario,
                                           const double *settings,
                                           size_t len);

/**
 * Constraint slack and photon-number truncation.
 *
 * # Safety
 * `scenario` must be a live handle or null.
 */
enum RrdpsStatus rrdps_scenario_set_lp(struct RrdpsScenario *scenario, double slack, size_t n_max);

/**
 * # Safety
 * `out_value` must be null or valid for writes.
 */
enum RrdpsStatus rrdps_transmittance(double beta_db_per_km, double distance_km, double *out_value);

/**
 * Overall gain `Q` at mean photon number `mu`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum RrdpsStatus rrdps_overall_gain(const struct RrdpsScenario *scenario,
                                    double mu,
                                    double distance_km,
                                    double *out_value);

/**
 * Bit error rate `e_b`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum RrdpsStatus rrdps_qber(const struct RrdpsScenario *scenario,
                            double mu,
                            double distance_km,
                            double *out_value);

/**
 * Worst-case single-photon detection probability `G_min`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum RrdpsStatus rrdps_min_single_photon_gain(const struct RrdpsScenario *scenario,
                                              double mu,
                                              double distance_km,
                                              double *out_value);

/**
 * Rate and intermediates at fixed `(mu, v_th)`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum RrdpsStatus rrdps_evaluate_point(const struct RrdpsScenario *scenario,
                                      double distance_km,
                                      double mu,
                                      uint32_t v_th,
                                      struct RrdpsPoint *out_point);

/**
 * Optimized `(mu, v_th)` at one distance.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum RrdpsStatus rrdps_optimize_point(const struct RrdpsScenario *scenario,
                                      double distance_km,
                                      struct RrdpsPoint *out_point);

/**
 * Warm-started scan over `d_min, d_min + d_step, ... <= d_max`.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum RrdpsStatus rrdps_scan(const struct RrdpsScenario *scenario,
                            double d_min,
                            double d_max,
                            double d_step,
                            struct RrdpsScan **out_scan);

/**
 * Number of points in a scan; 0 for a null handle.
 *
 * # Safety
 * `scan` must be a live handle or null.
 */
size_t rrdps_scan_len(const struct RrdpsScan *scan);

/**
 * # Safety
 * `scan` must be a live handle or null; `out_point` null or valid.
 */
enum RrdpsStatus rrdps_scan_get(const struct RrdpsScan *scan,
                                size_t index,
                                struct RrdpsPoint *out_point);

/**
 * Largest scanned distance with a positive rate, 0 if none.
 *
 * # Safety
 * Pointers must be null or valid.
 */
enum RrdpsStatus rrdps_scan_cutoff(const struct RrdpsScan *scan, double *out_value);

/**
 * # Safety
 * `scan` must be null or come from [`rrdps_scan`] and not be freed yet.
 */
void rrdps_scan_free(struct RrdpsScan *scan);

/**
 * # Safety
 * `out_value` must be null or valid for writes.
 */
enum RrdpsStatus rrdps_binary_entropy(double x, double *out_value);

/**
 * Probability that a Poisson(`mu`) source emits more than `v_th` photons.
 *
 * # Safety
 * `out_value` must be null or valid for writes.
 */
enum RrdpsStatus rrdps_source_tail(double mu, uint32_t v_th, double *out_value);

/**
 * Solves an LP given in the text problem format.
 *
 * On success writes the optimum and copies the witness into `witness`
 * (capacity `witness_cap`); `*out_len` always receives the witness length.
 * An infeasible problem returns `RRDPS_STATUS_INFEASIBLE`.
 *
 * # Safety
 * `problem` must be a NUL-terminated string; `witness` must hold
 * `witness_cap` doubles (may be null when `witness_cap` is 0); other
 * pointers null or valid.
 */
enum RrdpsStatus rrdps_solve_lp(const char *problem,
                                double *out_value,
                                double *witness,
                                size_t witness_cap,
                                size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RRDPS_H */
