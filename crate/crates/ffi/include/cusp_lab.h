#ifndef CUSP_LAB_H
#define CUSP_LAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CuspStatus {
  CUSP_STATUS_OK = 0,
  CUSP_STATUS_NULL_POINTER = 1,
  CUSP_STATUS_INVALID_ARGUMENT = 2,
  CUSP_STATUS_IO = 3,
  CUSP_STATUS_FORMAT = 4,
  CUSP_STATUS_NUMERIC = 5,
  CUSP_STATUS_UNCERTIFIED = 6,
  CUSP_STATUS_PANIC = 7,
} CuspStatus;

typedef enum CuspValueKind {
  CUSP_VALUE_KIND_FINITE = 0,
  CUSP_VALUE_KIND_PLUS_INFINITY = 1,
  CUSP_VALUE_KIND_MINUS_INFINITY = 2,
} CuspValueKind;

typedef enum CuspExperimentStatus {
  CUSP_EXPERIMENT_STATUS_PASS = 0,
  CUSP_EXPERIMENT_STATUS_FAIL = 1,
  CUSP_EXPERIMENT_STATUS_VACUOUS = 2,
} CuspExperimentStatus;

// Opaque grid function.
typedef struct CuspGrid CuspGrid;

typedef struct CuspParams {
  double lambda;
  double big_lambda;
  double gamma;
} CuspParams;

// `value` is meaningful only for `CUSP_VALUE_KIND_FINITE`.
typedef struct CuspOperatorValue {
  enum CuspValueKind kind;
  double value;
} CuspOperatorValue;

typedef struct CuspHypothesisReport {
  size_t checked_nodes;
  size_t active_nodes;
  size_t band_nodes;
  double max_super_residual;
  double max_sub_residual;
  double level;
  double tolerance;
  bool pass;
} CuspHypothesisReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length plus one, so a
// caller can size the buffer with a first call passing `len = 0`.
//
// # Safety
// `buf` must be valid for `len` bytes or null with `len = 0`.
size_t cusp_last_error(char *buf, size_t len);

// Grid function on the lattice `origin + spacing * index` with `shape[i]`
// nodes along axis `i`; `values` holds `prod(shape)` entries, last axis
// fastest.
//
// # Safety
// `shape` and `origin` must point to `dim` entries, `values` to the node
// count, `out` to writable storage.
enum CuspStatus cusp_grid_new(size_t dim,
                              const size_t *shape,
                              const double *origin,
                              double spacing,
                              const double *values,
                              struct CuspGrid **out);

// Constant grid function on the `n`-per-side lattice covering the centred
// ball of `radius`.
//
// # Safety
// `out` must point to writable storage.
enum CuspStatus cusp_grid_covering_ball(size_t dim,
                                        size_t n,
                                        double radius,
                                        double value,
                                        struct CuspGrid **out);

// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum CuspStatus cusp_grid_load(const char *path, struct CuspGrid **out);

// # Safety
// `g` must come from this library; `path` must be NUL-terminated.
enum CuspStatus cusp_grid_save(const struct CuspGrid *g, const char *path);

// Releases a handle; null is ignored.
//
// # Safety
// `g` must come from this library and must not be used afterwards.
void cusp_grid_free(struct CuspGrid *g);

// Node count; 0 for null.
//
// # Safety
// `g` must be null or come from this library.
size_t cusp_grid_len(const struct CuspGrid *g);

// Lattice spacing; NaN for null.
//
// # Safety
// `g` must be null or come from this library.
double cusp_grid_spacing(const struct CuspGrid *g);

// Copies the node values into `buf`, which must hold the node count.
//
// # Safety
// `buf` must be valid for `len` doubles.
enum CuspStatus cusp_grid_copy_values(const struct CuspGrid *g, double *buf, size_t len);

// Cutoff maximal operator on a symmetric `dim x dim` row-major Hessian.
//
// # Safety
// `hessian` must hold `dim * dim` doubles, `gradient` `dim`.
enum CuspStatus cusp_m_plus(const double *hessian,
                            const double *gradient,
                            size_t dim,
                            const struct CuspParams *params,
                            struct CuspOperatorValue *out);

// Cutoff minimal operator; see `cusp_m_plus`.
//
// # Safety
// As for `cusp_m_plus`.
enum CuspStatus cusp_m_minus(const double *hessian,
                             const double *gradient,
                             size_t dim,
                             const struct CuspParams *params,
                             struct CuspOperatorValue *out);

// Certifies `M^- u <= level` on the centred ball of `radius`, and
// `M^+ u >= -level` as well when `two_sided` is set. A failed
// certification is still `CUSP_STATUS_OK`; read `out->pass`.
//
// # Safety
// Pointers must be valid; `g` must come from this library.
enum CuspStatus cusp_check_hypothesis(const struct CuspGrid *g,
                                      double level,
                                      const struct CuspParams *params,
                                      double radius,
                                      double tolerance,
                                      bool two_sided,
                                      struct CuspHypothesisReport *out);

// Exact discrete inf-convolution; the result is a new handle.
//
// # Safety
// `g` must come from this library and `out` be writable.
enum CuspStatus cusp_inf_convolve(const struct CuspGrid *g, double epsilon, struct CuspGrid **out);

// Runs one experiment. `config` is `"default"`, a TOML path, or null for
// the default; `seed` and `grid` override it when non-zero. Reports are
// written to `out_dir` unless it is null.
//
// # Safety
// String arguments must be NUL-terminated or null where allowed; `out`
// must be writable.
enum CuspStatus cusp_run_experiment(const char *name,
                                    const char *config,
                                    uint64_t seed,
                                    size_t grid,
                                    const char *out_dir,
                                    enum CuspExperimentStatus *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CUSP_LAB_H */
