#ifndef DTOUR_H
#define DTOUR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum DtourStatus {
  DTOUR_STATUS_OK = 0,
  DTOUR_STATUS_NULL_POINTER = 1,
  DTOUR_STATUS_INVALID_ARGUMENT = 2,
  DTOUR_STATUS_DEGENERATE_BASIS = 3,
  DTOUR_STATUS_DIMENSION_MISMATCH = 4,
  DTOUR_STATUS_IO = 5,
  DTOUR_STATUS_FORMAT = 6,
  DTOUR_STATUS_ORTHONORMALITY_VIOLATION = 7,
  DTOUR_STATUS_PANIC = 8,
  DTOUR_STATUS_OTHER = 9,
} DtourStatus;

/**
 * An in-memory dataset.
 */
typedef struct DtourDataset DtourDataset;

/**
 * A compiled tour path.
 */
typedef struct DtourTour DtourTour;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *dtour_last_error(void);

/**
 * Library version, static storage.
 */
const char *dtour_version(void);

/**
 * Loads and compiles a JSON tour file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DtourStatus dtour_tour_load(const char *path, struct DtourTour **out);

/**
 * Compiles a tour from `k` keyframes of `p × 2` bases stored back to back.
 *
 * # Safety
 * `bases` must hold `k * p * 2` doubles and `out` must be writable.
 */
enum DtourStatus dtour_tour_compile(const double *bases,
                                    size_t p,
                                    size_t k,
                                    bool cyclic,
                                    struct DtourTour **out);

/**
 * Releases a tour; null is ignored.
 *
 * # Safety
 * `tour` must be null or a handle from this library not yet freed.
 */
void dtour_tour_free(struct DtourTour *tour);

/**
 * Dimension `p` of the tour's bases, or 0 for a null handle.
 *
 * # Safety
 * `tour` must be null or a live handle.
 */
size_t dtour_tour_dims(const struct DtourTour *tour);

/**
 * Keyframe count, or 0 for a null handle.
 *
 * # Safety
 * `tour` must be null or a live handle.
 */
size_t dtour_tour_keyframe_count(const struct DtourTour *tour);

/**
 * Total path length, or NaN for a null handle.
 *
 * # Safety
 * `tour` must be null or a live handle.
 */
double dtour_tour_total_length(const struct DtourTour *tour);

/**
 * Writes each keyframe's normalized position into `out[0..len]`.
 *
 * # Safety
 * `tour` must be live and `out` must hold `len` doubles.
 */
enum DtourStatus dtour_tour_keyframe_positions(const struct DtourTour *tour,
                                               double *out,
                                               size_t len);

/**
 * Evaluates the path at `t` into `out` (row-major `p × 2`).
 *
 * # Safety
 * `tour` must be live and `out` must hold `2p` doubles.
 */
enum DtourStatus dtour_tour_basis_at(const struct DtourTour *tour, double t, double *out);

/**
 * Copies `p` column-major columns of `n` floats into a dataset.
 *
 * # Safety
 * `columns` must hold `n * p` floats and `out` must be writable.
 */
enum DtourStatus dtour_dataset_new(const float *columns,
                                   size_t n,
                                   size_t p,
                                   struct DtourDataset **out);

/**
 * Loads a `.dtc1` columnar file, or CSV for any other extension.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum DtourStatus dtour_dataset_load(const char *path, struct DtourDataset **out);

/**
 * Releases a dataset; null is ignored.
 *
 * # Safety
 * `ds` must be null or a handle from this library not yet freed.
 */
void dtour_dataset_free(struct DtourDataset *ds);

/**
 * Row count, or 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
size_t dtour_dataset_rows(const struct DtourDataset *ds);

/**
 * Projects every row through `basis` into `out_xy` (`n` interleaved x, y pairs).
 *
 * # Safety
 * `ds` must be live, `basis` must hold `2p` doubles and `out_xy` `2n` floats.
 */
enum DtourStatus dtour_project(const struct DtourDataset *ds, const double *basis, float *out_xy);

/**
 * Grassmann geodesic distance between the planes of two `p × 2` bases.
 *
 * # Safety
 * `a` and `b` must each hold `2p` doubles; `out` must be writable.
 */
enum DtourStatus dtour_geodesic(const double *a, const double *b, size_t p, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DTOUR_H */
