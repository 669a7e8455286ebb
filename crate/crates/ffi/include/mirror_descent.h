#ifndef MIRROR_DESCENT_H
#define MIRROR_DESCENT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum MdStatus {
  MD_STATUS_OK = 0,
  MD_STATUS_NULL_POINTER = 1,
  MD_STATUS_INVALID_ARGUMENT = 2,
  MD_STATUS_DOMAIN = 3,
  MD_STATUS_PRECONDITION = 4,
  MD_STATUS_DEGENERATE = 5,
  MD_STATUS_PARSE = 6,
  MD_STATUS_VALIDATION = 7,
  MD_STATUS_INVARIANT_VIOLATION = 8,
  MD_STATUS_MISSING_SOLUTION = 9,
  MD_STATUS_IO = 10,
  MD_STATUS_OUT_OF_RANGE = 11,
  MD_STATUS_PANIC = 12,
} MdStatus;

/**
 * A loaded or generated problem instance.
 */
typedef struct MdInstance MdInstance;

/**
 * Result of a restarted run.
 */
typedef struct MdRestart MdRestart;

/**
 * Result of an adaptive or partial-adaptive run.
 */
typedef struct MdTrace MdTrace;

/**
 * One iteration of a trace.
 */
typedef struct MdStep {
  size_t k;
  /**
   * 1 for a productive step, 0 otherwise.
   */
  uint8_t productive;
  double step_size;
  double f_value;
  double g_value;
  double grad_dual_norm;
} MdStep;

/**
 * One restart of a restarted run.
 */
typedef struct MdRestartStep {
  size_t p;
  double r_p_sq;
  double eps_p;
  double inner_accuracy;
  size_t inner_iterations;
  size_t productive_count;
  /**
   * `‖x_p − x*‖²`, NaN when the instance has no known solution.
   */
  double dist_sq_to_solution;
} MdRestartStep;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `md_*` call on the same thread.
 */
const char *md_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *md_version(void);

/**
 * Loads an instance from a JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum MdStatus md_instance_load(const char *path, struct MdInstance **out);

/**
 * Parses an instance from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum MdStatus md_instance_from_json(const char *json, struct MdInstance **out);

/**
 * Builds a fixture by name: `active-linear`, `strongly-convex-ball` or
 * `max-quadratic-linear`.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum MdStatus md_instance_fixture(const char *name, struct MdInstance **out);

/**
 * Random max-of-quadratics instance on `[−1,1]^dim`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MdStatus md_instance_generate(size_t dim,
                                   size_t pieces,
                                   uint64_t seed,
                                   struct MdInstance **out);

/**
 * Serializes an instance; release the string with `md_string_free`.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum MdStatus md_instance_to_json(const struct MdInstance *inst, char **out);

/**
 * # Safety
 * `s` must come from `md_instance_to_json` and not be freed twice.
 */
void md_string_free(char *s);

/**
 * # Safety
 * `inst` must be null or a handle not yet freed.
 */
void md_instance_free(struct MdInstance *inst);

/**
 * Dimension of the instance, 0 for a null handle.
 *
 * # Safety
 * `inst` must be null or a live handle.
 */
size_t md_instance_dim(const struct MdInstance *inst);

/**
 * Partial-adaptive method at accuracy `eps`.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum MdStatus md_solve_partial(const struct MdInstance *inst, double eps, struct MdTrace **out);

/**
 * Adaptive method at accuracy `eps`, capped at `cap_multiplier` times its
 * iteration bound.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum MdStatus md_solve_adaptive(const struct MdInstance *inst,
                                double eps,
                                double cap_multiplier,
                                struct MdTrace **out);

/**
 * # Safety
 * `trace` must be null or a handle not yet freed.
 */
void md_trace_free(struct MdTrace *trace);

/**
 * Number of steps taken, 0 for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t md_trace_total_iterations(const struct MdTrace *trace);

/**
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t md_trace_productive_count(const struct MdTrace *trace);

/**
 * # Safety
 * `trace` must be null or a live handle.
 */
size_t md_trace_nonproductive_count(const struct MdTrace *trace);

/**
 * `f(x̄)`, NaN for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
double md_trace_output_f(const struct MdTrace *trace);

/**
 * `g(x̄)`, NaN for a null handle.
 *
 * # Safety
 * `trace` must be null or a live handle.
 */
double md_trace_output_g(const struct MdTrace *trace);

/**
 * Copies `x̄` into `buf`, which must hold at least `md_instance_dim` values.
 *
 * # Safety
 * `trace` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum MdStatus md_trace_output_point(const struct MdTrace *trace, double *buf, size_t len);

/**
 * Step `k` of the trace.
 *
 * # Safety
 * `trace` must be a live handle; `out` must be writable.
 */
enum MdStatus md_trace_step(const struct MdTrace *trace, size_t k, struct MdStep *out);

/**
 * Restarted partial-adaptive method from `x0` (the setup's center when
 * null) with initial squared radius `r0_sq`.
 *
 * # Safety
 * `inst` must be a live handle; `x0` must be null or point to `dim`
 * doubles; `out` must be writable.
 */
enum MdStatus md_restart(const struct MdInstance *inst,
                         double eps,
                         const double *x0,
                         size_t dim,
                         double r0_sq,
                         struct MdRestart **out);

/**
 * # Safety
 * `r` must be null or a handle not yet freed.
 */
void md_restart_free(struct MdRestart *r);

/**
 * Number of restarts `p̂`, 0 for a null handle.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
size_t md_restart_count(const struct MdRestart *r);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
size_t md_restart_total_inner_iterations(const struct MdRestart *r);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
size_t md_restart_iteration_bound(const struct MdRestart *r);

/**
 * Restart `index` (0-based; its `p` is `index + 1`).
 *
 * # Safety
 * `r` must be a live handle; `out` must be writable.
 */
enum MdStatus md_restart_step(const struct MdRestart *r, size_t index, struct MdRestartStep *out);

/**
 * Copies the final point into `buf`.
 *
 * # Safety
 * `r` must be a live handle; `buf` must point to `len` writable doubles.
 */
enum MdStatus md_restart_final_point(const struct MdRestart *r, double *buf, size_t len);

/**
 * Inverse of `τ(δ) = max{δG + δ²L/2, δM_g}`.
 *
 * # Safety
 * `out` must be writable.
 */
enum MdStatus md_phi_inverse(double eps, double grad_norm_star, double l, double m_g, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIRROR_DESCENT_H */
