#ifndef CDYN_H
#define CDYN_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum CdynStatus {
  CDYN_STATUS_OK = 0,
  CDYN_STATUS_NULL_POINTER = 1,
  CDYN_STATUS_INVALID_INPUT = 2,
  CDYN_STATUS_CONFIG = 3,
  CDYN_STATUS_REFUSED = 4,
  CDYN_STATUS_BUDGET = 5,
  // A solver monitor or stability guard stopped the run.
  CDYN_STATUS_RUNTIME = 6,
  CDYN_STATUS_NON_FINITE = 7,
  CDYN_STATUS_MEASURE = 8,
  CDYN_STATUS_IO = 9,
  CDYN_STATUS_BUFFER_TOO_SMALL = 10,
  CDYN_STATUS_PANIC = 11,
} CdynStatus;

// A loaded and validated scenario.
typedef struct CdynScenario CdynScenario;

// Result of a convergence sweep.
typedef struct CdynSweep CdynSweep;

// Samples of a microscopic run.
typedef struct CdynTrajectory CdynTrajectory;

// One row of a sweep.
typedef struct CdynSweepRow {
  size_t n;
  double x_error;
  double m_error;
  double x_projection;
  double m_projection;
} CdynSweepRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *cdyn_version(void);

// Copies the message of the last failed call on this thread into `buf`
// (truncated, always NUL-terminated when `len > 0`) and returns the length
// the full message needs including its NUL, or 0 if the last call succeeded.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t cdyn_last_error(char *buf, size_t len);

// Loads and validates a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum CdynStatus cdyn_scenario_load(const char *path, struct CdynScenario **out);

// Parses and validates a scenario from JSON text.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum CdynStatus cdyn_scenario_from_json(const char *json, struct CdynScenario **out);

// # Safety
// `sc` must be null or a handle from this library not yet freed.
void cdyn_scenario_free(struct CdynScenario *sc);

// Agent count used for single runs, the horizon and the time step.
//
// # Safety
// `sc` must be a live handle; each output must be null or writable.
enum CdynStatus cdyn_scenario_info(const struct CdynScenario *sc,
                                   size_t *agents,
                                   double *horizon,
                                   double *dt);

// Integrates the microscopic system of `sc` with RK4 on `agents` agents
// (0 for the scenario default), recording `samples ≥ 2` uniform instants.
//
// # Safety
// `sc` must be a live handle; `out` must be writable.
enum CdynStatus cdyn_simulate_micro(const struct CdynScenario *sc,
                                    size_t agents,
                                    size_t samples,
                                    struct CdynTrajectory **out);

// # Safety
// `t` must be null or a handle from this library not yet freed.
void cdyn_trajectory_free(struct CdynTrajectory *t);

// Number of samples, agents and opinion dimension.
//
// # Safety
// `t` must be a live handle; each output must be null or writable.
enum CdynStatus cdyn_trajectory_shape(const struct CdynTrajectory *t,
                                      size_t *samples,
                                      size_t *agents,
                                      size_t *dim);

// Copies the sample instants.
//
// # Safety
// `t` must be a live handle; `buf` must hold `len` doubles.
enum CdynStatus cdyn_trajectory_times(const struct CdynTrajectory *t, double *buf, size_t len);

// Copies the opinions of sample `k`, agent-major (`agents × dim` values).
//
// # Safety
// `t` must be a live handle; `buf` must hold `len` doubles.
enum CdynStatus cdyn_trajectory_positions(const struct CdynTrajectory *t,
                                          size_t k,
                                          double *buf,
                                          size_t len);

// Copies the weights of sample `k` (`agents` values).
//
// # Safety
// `t` must be a live handle; `buf` must hold `len` doubles.
enum CdynStatus cdyn_trajectory_weights(const struct CdynTrajectory *t,
                                        size_t k,
                                        double *buf,
                                        size_t len);

// Runs the convergence sweep over `n_list` (the scenario's list when
// `n_len == 0`).
//
// # Safety
// `sc` must be a live handle; `n_list` must hold `n_len` values; `out`
// must be writable.
enum CdynStatus cdyn_sweep_run(const struct CdynScenario *sc,
                               const size_t *n_list,
                               size_t n_len,
                               struct CdynSweep **out);

// # Safety
// `s` must be null or a handle from this library not yet freed.
void cdyn_sweep_free(struct CdynSweep *s);

// Row count and overall verdict.
//
// # Safety
// `s` must be a live handle; each output must be null or writable.
enum CdynStatus cdyn_sweep_summary(const struct CdynSweep *s, size_t *rows, bool *passed);

// Row `k` of the sweep, rows sorted by agent count.
//
// # Safety
// `s` must be a live handle; `out` must be writable.
enum CdynStatus cdyn_sweep_row(const struct CdynSweep *s, size_t k, struct CdynSweepRow *out);

// Wasserstein-1 distance between two non-negative atom sets on the line
// with equal total mass.
//
// # Safety
// Each location/mass array must hold its stated number of values; `out`
// must be writable.
enum CdynStatus cdyn_wasserstein1(size_t a_len,
                                  const double *a_loc,
                                  const double *a_mass,
                                  size_t b_len,
                                  const double *b_loc,
                                  const double *b_mass,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CDYN_H */
