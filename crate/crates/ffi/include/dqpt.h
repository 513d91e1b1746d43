#ifndef DQPT_H
#define DQPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DQPT_METHOD_KRYLOV 0

#define DQPT_METHOD_DENSE 1

#define DQPT_COLUMN_TAU 0

#define DQPT_COLUMN_P_RIGHT 1

#define DQPT_COLUMN_P_LEFT 2

#define DQPT_COLUMN_LAMBDA_TOTAL 3

#define DQPT_COLUMN_LAMBDA_MIN 4

#define DQPT_COLUMN_M_X 5

// NaN unless the run requested entanglement observables.
#define DQPT_COLUMN_ENTROPY 6

// NaN unless requested, and where the mean spin vanishes.
#define DQPT_COLUMN_XI_SQUARED 7

// Shot estimates; NaN unless the run sampled.
#define DQPT_COLUMN_P_RIGHT_SAMPLED 8

#define DQPT_COLUMN_P_LEFT_SAMPLED 9

#define DQPT_ESTIMATE_CROSSING 0

#define DQPT_ESTIMATE_LINEAR_FIT 1

// Linear fit on the sampled probabilities with their binomial errors.
#define DQPT_ESTIMATE_SAMPLED_FIT 2

typedef enum DqptStatus {
  DQPT_STATUS_OK = 0,
  DQPT_STATUS_NULL_POINTER = 1,
  DQPT_STATUS_INVALID_ARGUMENT = 2,
  DQPT_STATUS_RESOURCE_LIMIT = 3,
  DQPT_STATUS_NUMERICAL = 4,
  DQPT_STATUS_NO_CROSSING = 5,
  DQPT_STATUS_NOT_RUN = 6,
  DQPT_STATUS_BUFFER_TOO_SMALL = 7,
  DQPT_STATUS_PANIC = 8,
} DqptStatus;

// Opaque simulation handle.
typedef struct DqptSimulation DqptSimulation;

// Time grid and propagation settings for `dqpt_simulation_run`.
typedef struct DqptRunOptions {
  // Final `τ = |B| t`.
  double time_max;
  // Grid points including `τ = 0`.
  uint32_t n_points;
  uint32_t method;
  uint32_t krylov_dim;
  double tolerance;
  // Shots per grid point; 0 skips sampling.
  uint64_t shots;
  uint64_t seed;
  // Nonzero to fill the entropy and squeezing columns (even `n_spins` only).
  uint8_t entanglement;
} DqptRunOptions;

typedef struct DqptEstimate {
  double tau_crit;
  double ci_low;
  double ci_high;
} DqptEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread; empty after a success.
// The pointer stays valid until the next call into this library on the same
// thread.
const char *dqpt_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *dqpt_version(void);

struct DqptRunOptions dqpt_default_run_options(void);

// Power-law couplings `J_ij ∝ |i-j|^-α` with Kac-normalized mean `j_over_b`
// and unit field. On success `*out` owns a handle for `dqpt_simulation_free`.
//
// # Safety
// `out` must be null or valid for a pointer write.
enum DqptStatus dqpt_simulation_new(uint32_t n_spins,
                                    double alpha,
                                    double j_over_b,
                                    struct DqptSimulation **out);

// # Safety
// `sim` must be null or a handle from `dqpt_simulation_new` not yet freed.
void dqpt_simulation_free(struct DqptSimulation *sim);

// Evolves `|⇒⟩` over the option's grid and stores the trace, replacing any
// earlier one. `options` may be null for the defaults.
//
// # Safety
// `sim` must be a live handle; `options` null or valid for reads.
enum DqptStatus dqpt_simulation_run(struct DqptSimulation *sim,
                                    const struct DqptRunOptions *options);

// Number of grid points of the stored trace, 0 before the first run.
//
// # Safety
// `sim` must be null or a live handle.
size_t dqpt_simulation_len(const struct DqptSimulation *sim);

// Copies one column of the trace into `buffer`, which must hold at least
// `dqpt_simulation_len` values.
//
// # Safety
// `sim` must be a live handle and `buffer` valid for `capacity` writes.
enum DqptStatus dqpt_simulation_copy_column(const struct DqptSimulation *sim,
                                            uint32_t column,
                                            double *buffer,
                                            size_t capacity);

// First critical time of the stored trace.
//
// # Safety
// `sim` must be a live handle and `out` valid for a write.
enum DqptStatus dqpt_simulation_critical_time(const struct DqptSimulation *sim,
                                              uint32_t estimator,
                                              struct DqptEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DQPT_H */
