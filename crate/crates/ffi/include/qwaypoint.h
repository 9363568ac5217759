#ifndef QWAYPOINT_H
#define QWAYPOINT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QwStatus {
  QW_STATUS_OK = 0,
  QW_STATUS_NULL_POINTER = 1,
  QW_STATUS_INVALID_ARGUMENT = 2,
  QW_STATUS_PARSE = 3,
  QW_STATUS_VALIDATION = 4,
  QW_STATUS_NOT_CONTROLLABLE = 5,
  QW_STATUS_POSTCONDITION = 6,
  QW_STATUS_IO = 7,
  QW_STATUS_OUT_OF_RANGE = 8,
  QW_STATUS_PANIC = 9,
} QwStatus;

typedef enum QwControllability {
  QW_CONTROLLABILITY_NO = 0,
  QW_CONTROLLABILITY_SU = 1,
  QW_CONTROLLABILITY_U = 2,
} QwControllability;

/**
 * Spanning-rank report of a set of conjugated dipoles.
 */
typedef struct QwSpanReport QwSpanReport;

/**
 * A validated `(H0, μ)` pair.
 */
typedef struct QwSystem QwSystem;

/**
 * Propagator samples `U(t_k)` at the field nodes.
 */
typedef struct QwTrajectory QwTrajectory;

/**
 * An ordered list of way-point unitaries.
 */
typedef struct QwWaypointSet QwWaypointSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * failing call on the same thread.
 */
const char *qw_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qw_version(void);

/**
 * Builds a system from row-major real `n*n` arrays.
 *
 * # Safety
 * `h0` and `mu` must point to `n*n` doubles; `out` must be writable.
 */
enum QwStatus qw_system_new(size_t n, const double *h0, const double *mu, struct QwSystem **out);

/**
 * Loads a JSON or CSV system file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum QwStatus qw_system_load(const char *path, struct QwSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from this library, not yet freed.
 */
void qw_system_free(struct QwSystem *sys);

/**
 * Dimension `N`, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
size_t qw_system_dim(const struct QwSystem *sys);

/**
 * Lie-closure verdict and dimension.
 *
 * # Safety
 * `sys` must be a live handle; `verdict` and `dimension` must be writable.
 */
enum QwStatus qw_controllability(const struct QwSystem *sys,
                                 enum QwControllability *verdict,
                                 size_t *dimension);

/**
 * Dipole-dependent way-points (four per level pair) for the system's μ.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
enum QwStatus qw_waypoints_dipole_dependent(const struct QwSystem *sys, struct QwWaypointSet **out);

/**
 * Dipole-independent way-points for dimension `n` on the default angle grid.
 *
 * # Safety
 * `out` must be writable.
 */
enum QwStatus qw_waypoints_dipole_independent(size_t n, struct QwWaypointSet **out);

/**
 * # Safety
 * `set` must be null or a live handle.
 */
size_t qw_waypoints_len(const struct QwWaypointSet *set);

/**
 * Copies way-point `index` (0-based) into `re` and `im`, each `n*n` doubles.
 *
 * # Safety
 * `set` must be a live handle; `re` and `im` must hold `n*n` doubles.
 */
enum QwStatus qw_waypoints_get(const struct QwWaypointSet *set,
                               size_t index,
                               double *re,
                               double *im);

/**
 * # Safety
 * `set` must be null or a live handle, not yet freed.
 */
void qw_waypoints_free(struct QwWaypointSet *set);

/**
 * Span of `W* μ W` over the set, for the system's μ.
 *
 * # Safety
 * `sys` and `set` must be live handles; `out` must be writable.
 */
enum QwStatus qw_waypoints_span(const struct QwSystem *sys,
                                const struct QwWaypointSet *set,
                                struct QwSpanReport **out);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
size_t qw_span_rank(const struct QwSpanReport *report);

/**
 * Matrix dimension `N`; a full span has rank `N²−1`.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t qw_span_dim(const struct QwSpanReport *report);

/**
 * # Safety
 * `report` must be null or a live handle.
 */
bool qw_span_is_full(const struct QwSpanReport *report);

/**
 * Copies up to `len` singular values (descending) and returns how many exist.
 *
 * # Safety
 * `report` must be a live handle; `buf` must hold `len` doubles or be null
 * when `len` is 0.
 */
size_t qw_span_singular_values(const struct QwSpanReport *report, double *buf, size_t len);

/**
 * # Safety
 * `report` must be null or a live handle, not yet freed.
 */
void qw_span_free(struct QwSpanReport *report);

/**
 * Propagates `m` piecewise-constant amplitudes over `horizon`.
 *
 * # Safety
 * `sys` must be a live handle; `values` must hold `m` doubles; `out` must be
 * writable.
 */
enum QwStatus qw_propagate(const struct QwSystem *sys,
                           double horizon,
                           const double *values,
                           size_t m,
                           struct QwTrajectory **out);

/**
 * Number of samples, `M + 1`.
 *
 * # Safety
 * `traj` must be null or a live handle.
 */
size_t qw_trajectory_len(const struct QwTrajectory *traj);

/**
 * Copies `U(t_k)` into `re` and `im`, each `n*n` doubles.
 *
 * # Safety
 * `traj` must be a live handle; `re` and `im` must hold `n*n` doubles.
 */
enum QwStatus qw_trajectory_unitary(const struct QwTrajectory *traj,
                                    size_t k,
                                    double *re,
                                    double *im);

/**
 * Span of the conjugated dipole over every trajectory sample.
 *
 * # Safety
 * `traj` must be a live handle; `out` must be writable.
 */
enum QwStatus qw_trajectory_span(const struct QwTrajectory *traj, struct QwSpanReport **out);

/**
 * # Safety
 * `traj` must be null or a live handle, not yet freed.
 */
void qw_trajectory_free(struct QwTrajectory *traj);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QWAYPOINT_H */
