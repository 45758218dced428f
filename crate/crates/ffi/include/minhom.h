#ifndef MINHOM_H
#define MINHOM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes.
typedef enum MhStatus {
  MH_STATUS_OK = 0,
  MH_STATUS_NULL_POINTER = 1,
  MH_STATUS_INVALID_CURVE = 2,
  MH_STATUS_DOMAIN = 3,
  MH_STATUS_CONFIG = 4,
  MH_STATUS_PRECONDITION = 5,
  MH_STATUS_INDETERMINATE_WINDING = 6,
  MH_STATUS_DEGENERATE_CURVE = 7,
  MH_STATUS_MESH_QUALITY = 8,
  MH_STATUS_SOLVER = 9,
  MH_STATUS_DESCENT_FAILURE = 10,
  MH_STATUS_NON_CONVERGENCE = 11,
  MH_STATUS_DISCONTINUOUS_PARAM = 12,
  MH_STATUS_PARSE = 13,
  MH_STATUS_OUTPUT = 14,
  MH_STATUS_PANIC = 15,
} MhStatus;

// Opaque closed planar curve.
typedef struct MhCurve MhCurve;

// Opaque solve result.
typedef struct MhSolution MhSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length without the NUL.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t mh_last_error(char *buf, size_t len);

// Build a curve from `n` interleaved `x, y` pairs.
//
// # Safety
// `xy` must be valid for `2 * n` reads and `out` for one write.
enum MhStatus mh_curve_from_points(const double *xy, size_t n, struct MhCurve **out);

// Release a curve. Null is ignored.
//
// # Safety
// `curve` must come from [`mh_curve_from_points`] and not be used again.
void mh_curve_free(struct MhCurve *curve);

// Winding number of `curve` around `(x, y)`.
//
// # Safety
// Pointers must be valid.
enum MhStatus mh_winding_number(const struct MhCurve *curve, double x, double y, int64_t *out);

// Raster estimate of the integral of `|w|` with its error bound.
//
// # Safety
// Pointers must be valid.
enum MhStatus mh_winding_area(const struct MhCurve *curve,
                              size_t resolution,
                              double *value,
                              double *error);

// Run the full pipeline. `config_json` may be null for defaults.
//
// # Safety
// `curve` and `out` must be valid; `config_json` null or NUL-terminated.
enum MhStatus mh_solve(const struct MhCurve *curve,
                       const char *config_json,
                       struct MhSolution **out);

// Release a solution. Null is ignored.
//
// # Safety
// `sol` must come from [`mh_solve`] and not be used again.
void mh_solution_free(struct MhSolution *sol);

// Extrapolated limit area. NaN for a null handle.
//
// # Safety
// `sol` must be null or valid.
double mh_solution_area0(const struct MhSolution *sol);

// Planarity defect of the last solve. NaN for a null handle.
//
// # Safety
// `sol` must be null or valid.
double mh_solution_planarity(const struct MhSolution *sol);

// Area swept by the homotopy. NaN for a null handle.
//
// # Safety
// `sol` must be null or valid.
double mh_solution_swept_area(const struct MhSolution *sol);

// 1 if every verdict check passed, 0 otherwise or for a null handle.
//
// # Safety
// `sol` must be null or valid.
int32_t mh_solution_passed(const struct MhSolution *sol);

// Sample the homotopy at time `t` into `out_xy`, which holds `2 * n`
// doubles as interleaved `x, y`.
//
// # Safety
// `sol` must be valid and `out_xy` valid for `2 * n` writes.
enum MhStatus mh_solution_frame(const struct MhSolution *sol, double t, size_t n, double *out_xy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MINHOM_H */
