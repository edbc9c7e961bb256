#ifndef RINGBEC_H
#define RINGBEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum RbStatus {
  RB_STATUS_OK = 0,
  // Null pointer, bad UTF-8 or index out of range.
  RB_STATUS_INVALID_ARGUMENT = 1,
  // Malformed or inconsistent configuration or parameters.
  RB_STATUS_CONFIG = 2,
  // Integration or analysis failed.
  RB_STATUS_NUMERICAL = 3,
  RB_STATUS_IO = 4,
  // Internal panic caught at the boundary.
  RB_STATUS_PANIC = 5,
} RbStatus;

typedef enum RbFormat {
  RB_FORMAT_CSV = 0,
  RB_FORMAT_JSONL = 1,
} RbFormat;

// Model parameters.
typedef struct RbParams RbParams;

// Integrated trajectory together with the hash of its configuration.
typedef struct RbTrajectory RbTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next call on the same thread.
const char *rb_last_error(void);

// Static NUL-terminated version string.
const char *rb_version(void);

// Parameters from the dimensionless interaction `lambda = U N_T / (2 k_tilde)`.
//
// # Safety
// `out` must be valid for a pointer write.
enum RbStatus rb_params_new(size_t n_wells,
                            double total_atoms,
                            double k_tilde,
                            double lambda,
                            struct RbParams **out);

// Parameters from the on-site interaction `U`.
//
// # Safety
// `out` must be valid for a pointer write.
enum RbStatus rb_params_new_with_u(size_t n_wells,
                                   double total_atoms,
                                   double k_tilde,
                                   double u,
                                   struct RbParams **out);

// # Safety
// `params` must come from `rb_params_new*` and not be used afterwards. Null is ignored.
void rb_params_free(struct RbParams *params);

// # Safety
// `params` must be a live handle and `out` valid for a write.
enum RbStatus rb_params_lambda(const struct RbParams *params, double *out);

// # Safety
// `params` must be a live handle and `out` valid for a write.
enum RbStatus rb_params_u(const struct RbParams *params, double *out);

// `omega_R = 2 k_tilde`.
//
// # Safety
// `params` must be a live handle and `out` valid for a write.
enum RbStatus rb_params_omega_r(const struct RbParams *params, double *out);

// Closed-form drive resonance in units of `omega_R`; four wells only.
//
// # Safety
// `params` must be a live handle and `out` valid for a write.
enum RbStatus rb_resonance_frequency(const struct RbParams *params, double *out);

// Residual of the self-confinement criterion at imbalance `n`.
//
// # Safety
// `out` must be valid for a write.
enum RbStatus rb_selfconfine_residual(double n, double lambda, double *out);

// Analytic confinement (`upper`) and depletion (`lower`) thresholds in atoms.
//
// # Safety
// Every output pointer must be valid for a write.
enum RbStatus rb_thresholds_analytic(double lambda,
                                     double total_atoms,
                                     double *n_star,
                                     double *upper,
                                     double *lower);

// Integrates a TOML configuration.
//
// # Safety
// `config` must be a NUL-terminated string and `out` valid for a pointer write.
enum RbStatus rb_simulate_config(const char *config, struct RbTrajectory **out);

// Integrates a built-in preset such as `"fig3a"`.
//
// # Safety
// `name` must be a NUL-terminated string and `out` valid for a pointer write.
enum RbStatus rb_simulate_preset(const char *name, struct RbTrajectory **out);

// # Safety
// `traj` must come from `rb_simulate_*` and not be used afterwards. Null is ignored.
void rb_trajectory_free(struct RbTrajectory *traj);

// Number of samples.
//
// # Safety
// `traj` must be a live handle and `out` valid for a write.
enum RbStatus rb_trajectory_len(const struct RbTrajectory *traj, size_t *out);

// # Safety
// `traj` must be a live handle and `out` valid for a write.
enum RbStatus rb_trajectory_n_wells(const struct RbTrajectory *traj, size_t *out);

// Time of `sample` in `1/omega_R`.
//
// # Safety
// `traj` must be a live handle and `out` valid for a write.
enum RbStatus rb_trajectory_time(const struct RbTrajectory *traj, size_t sample, double *out);

// Copies the populations of `sample` into `out[0..len]`; `len` must equal the well count.
//
// # Safety
// `traj` must be a live handle and `out` valid for `len` writes.
enum RbStatus rb_trajectory_populations(const struct RbTrajectory *traj,
                                        size_t sample,
                                        double *out,
                                        size_t len);

// Largest `|sum N_i - N_T| / N_T` over accepted steps.
//
// # Safety
// `traj` must be a live handle and `out` valid for a write.
enum RbStatus rb_trajectory_norm_drift(const struct RbTrajectory *traj, double *out);

// Writes the trajectory as CSV or JSONL, atomically.
//
// # Safety
// `traj` must be a live handle and `path` a NUL-terminated string.
enum RbStatus rb_trajectory_write(const struct RbTrajectory *traj,
                                  const char *path,
                                  enum RbFormat format);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RINGBEC_H */
