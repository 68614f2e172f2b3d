#ifndef ZENO_GATE_H
#define ZENO_GATE_H

#include <stddef.h>
#include <stdint.h>

// Result of every fallible call.
typedef enum ZgStatus {
  ZG_STATUS_OK = 0,
  ZG_STATUS_NULL_POINTER = 1,
  ZG_STATUS_INVALID_STRING = 2,
  ZG_STATUS_USAGE = 3,
  ZG_STATUS_INVALID_CONFIG = 4,
  ZG_STATUS_NUMERICAL = 5,
  ZG_STATUS_IO = 6,
  ZG_STATUS_UNDEFINED = 7,
  ZG_STATUS_PANIC = 8,
  ZG_STATUS_INVALID_INPUT = 9,
} ZgStatus;

// Opaque resolved gate configuration.
typedef struct ZgConfig ZgConfig;

// Opaque result of one gate run.
typedef struct ZgTrajectory ZgTrajectory;

// Gate figures of merit; `rank` counts the Schmidt coefficients available.
typedef struct ZgGateMetrics {
  double fidelity;
  double pump_fidelity;
  double first_mode_probability;
  double conditional_first_mode_probability;
  uintptr_t rank;
} ZgGateMetrics;

typedef struct ZgLossMetrics {
  double signal_energy_loss;
  double total_norm_deficit;
  double dissipated_signal;
  double dissipated_pump;
  double dissipated_sum_frequency;
} ZgLossMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success. Valid until the next call.
const char *zg_last_error(void);

// Library version, a static NUL-terminated string.
const char *zg_version(void);

// Resolve a flat key-value TOML text over the built-in defaults.
//
// # Safety
// `text` must be a NUL-terminated string and `out` a valid pointer.
enum ZgStatus zg_config_from_toml(const char *text, struct ZgConfig **out);

// Resolve a named scenario, optionally layering a configuration file (`path` may be null).
//
// # Safety
// `name` must be a NUL-terminated string, `path` null or NUL-terminated, `out` valid.
enum ZgStatus zg_config_from_scenario(const char *name, const char *path, struct ZgConfig **out);

// Replace Υ (rad/s); the configuration is re-validated.
//
// # Safety
// `config` must be a handle from this library.
enum ZgStatus zg_config_set_upsilon(struct ZgConfig *config, double upsilon_rad_s);

// Υ in rad/s.
//
// # Safety
// `config` must be a handle from this library and `out` valid.
enum ZgStatus zg_config_upsilon(const struct ZgConfig *config, double *out);

// Number of time steps of a run.
//
// # Safety
// `config` must be a handle from this library and `out` valid.
enum ZgStatus zg_config_steps(const struct ZgConfig *config, uintptr_t *out);

// Release a configuration; null is ignored.
//
// # Safety
// `config` must be null or a handle from this library not yet freed.
void zg_config_free(struct ZgConfig *config);

// Run the gate (or the single-photon reduction when one pulse is absent).
//
// # Safety
// `config` must be a handle from this library and `out` valid.
enum ZgStatus zg_run(const struct ZgConfig *config, struct ZgTrajectory **out);

// Release a trajectory; null is ignored.
//
// # Safety
// `traj` must be null or a handle from this library not yet freed.
void zg_trajectory_free(struct ZgTrajectory *traj);

// Total probability at the end of the window.
//
// # Safety
// `traj` must be a handle from this library and `out` valid.
enum ZgStatus zg_trajectory_final_norm(const struct ZgTrajectory *traj, double *out);

// Schmidt-based gate metrics of a two-photon run.
//
// # Safety
// `traj` must be a handle from this library and `out` valid.
enum ZgStatus zg_gate_metrics(const struct ZgTrajectory *traj, struct ZgGateMetrics *out);

// Copy up to `capacity` Schmidt coefficients into `buffer`; `len` receives the total count.
//
// # Safety
// `traj` must be a handle from this library, `buffer` valid for `capacity` doubles (or null
// with `capacity` 0) and `len` valid.
enum ZgStatus zg_schmidt_coefficients(const struct ZgTrajectory *traj,
                                      double *buffer,
                                      uintptr_t capacity,
                                      uintptr_t *len);

// Signal-energy loss and the probability absorbed per channel.
//
// # Safety
// `traj` must be a handle from this library and `out` valid.
enum ZgStatus zg_loss_metrics(const struct ZgTrajectory *traj, struct ZgLossMetrics *out);

// Phase of a single-photon run against its (mirrored, for rising exponentials) input.
// Returns `ZG_STATUS_UNDEFINED` with `overlap` set when the overlap is too small.
//
// # Safety
// `traj` must be a handle from this library; `phase` and `overlap` valid.
enum ZgStatus zg_pump_off_phase(const struct ZgTrajectory *traj, double *phase, double *overlap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ZENO_GATE_H */
