#ifndef SQMANIP_H
#define SQMANIP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SQ_MODE_SQ 0

#define SQ_MODE_ELLIPSE 1

typedef enum SqStatus {
  SQ_STATUS_OK = 0,
  SQ_STATUS_NULL_POINTER = 1,
  SQ_STATUS_INVALID_ARGUMENT = 2,
  // Scenario rejected; the message names the offending field.
  SQ_STATUS_VALIDATION = 3,
  SQ_STATUS_IO = 4,
  // Geometry, planning or simulation failure.
  SQ_STATUS_RUNTIME = 5,
  SQ_STATUS_OUT_OF_RANGE = 6,
  SQ_STATUS_PANIC = 7,
} SqStatus;

// Result of planning, and optionally simulating, one scenario.
typedef struct SqRun SqRun;

// Parsed scenario.
typedef struct SqScenario SqScenario;

typedef struct SqMetrics {
  double plan_time;
  double min_distance;
  double arc_length;
  double jerkiness;
  size_t samples;
  size_t ticks;
  double h_co_min;
  double sim_min_gap;
  double thrust_min;
  double thrust_max;
  size_t infeasible_ticks;
} SqMetrics;

// One planned sample: `z` is `[x, y, psi, theta1, theta3]`.
typedef struct SqSample {
  double s;
  double z[5];
  double eef[2];
  double eef_heading;
  double gap;
} SqSample;

// One control tick of a simulated run.
typedef struct SqTick {
  double t;
  double q[6];
  double theta[3];
  double thrust[6];
  double min_h;
  double min_gap;
  uint8_t status;
  bool fallback;
} SqTick;

// Planar superquadric: semi-axes, exponent and pose.
typedef struct SqShape {
  double a1;
  double a2;
  double eps;
  double x;
  double y;
  double angle;
} SqShape;

typedef struct SqGap {
  // Distance when disjoint, minus the penetration depth otherwise.
  double gap;
  double point_a[2];
  double point_b[2];
  double normal_angle;
} SqGap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sq_version(void);

// Copies the calling thread's last error message into `buf` (truncated, always
// NUL-terminated when `len > 0`) and returns the untruncated length without the NUL.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t sq_last_error(char *buf, size_t len);

// Loads a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum SqStatus sq_scenario_load(const char *path, struct SqScenario **out);

// Parses a scenario from TOML text; `name` is used when the text has none and may be null.
//
// # Safety
// String arguments must be NUL-terminated (or null for `name`); `out` must be valid.
enum SqStatus sq_scenario_from_toml(const char *text, const char *name, struct SqScenario **out);

// # Safety
// `scenario` must be null or a handle from this library not yet freed.
void sq_scenario_free(struct SqScenario *scenario);

// # Safety
// `scenario` and `out` must be valid.
enum SqStatus sq_scenario_obstacle_count(const struct SqScenario *scenario, size_t *out);

// Plans the scenario in `mode` (`SQ_MODE_SQ` or `SQ_MODE_ELLIPSE`) and, when
// `closed_loop` is set, flies the plan in simulation.
//
// # Safety
// `scenario` and `out` must be valid.
enum SqStatus sq_run(const struct SqScenario *scenario,
                     uint32_t mode,
                     bool closed_loop,
                     struct SqRun **out);

// # Safety
// `run` must be null or a handle from [`sq_run`] not yet freed.
void sq_run_free(struct SqRun *run);

// # Safety
// `run` and `out` must be valid.
enum SqStatus sq_run_metrics(const struct SqRun *run, struct SqMetrics *out);

// Number of planned samples and of simulated ticks (zero for plan-only runs).
//
// # Safety
// `run` must be valid; either output may be null.
enum SqStatus sq_run_counts(const struct SqRun *run, size_t *samples, size_t *ticks);

// # Safety
// `run` and `out` must be valid.
enum SqStatus sq_run_sample(const struct SqRun *run, size_t index, struct SqSample *out);

// # Safety
// `run` and `out` must be valid.
enum SqStatus sq_run_tick(const struct SqRun *run, size_t index, struct SqTick *out);

// Writes the run's output files into `dir`, creating it if needed.
//
// # Safety
// `run` must be valid and `dir` NUL-terminated.
enum SqStatus sq_run_emit(const struct SqRun *run, const char *dir);

// Signed gap between two planar superquadrics and the closest points.
//
// # Safety
// All pointers must be valid.
enum SqStatus sq_closest_gap(const struct SqShape *a, const struct SqShape *b, struct SqGap *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQMANIP_H */
