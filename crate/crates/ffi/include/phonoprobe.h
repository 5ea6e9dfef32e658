#ifndef PHONOPROBE_H
#define PHONOPROBE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum PpStatus {
  PP_STATUS_OK = 0,
  PP_STATUS_NULL_POINTER = 1,
  PP_STATUS_INVALID_ARGUMENT = 2,
  PP_STATUS_CONFIG = 3,
  PP_STATUS_IO = 4,
  PP_STATUS_FORMAT = 5,
  PP_STATUS_CHECKSUM = 6,
  PP_STATUS_NUMERIC = 7,
  PP_STATUS_BUFFER_TOO_SMALL = 8,
  PP_STATUS_NOT_FOUND = 9,
  PP_STATUS_PANIC = 10,
} PpStatus;

/**
 * A representation archive loaded into memory.
 */
typedef struct PpArchive PpArchive;

/**
 * A trained utterance encoder.
 */
typedef struct PpEncoder PpEncoder;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `capacity`. Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `capacity` writable bytes.
 */
size_t pp_last_error_message(char *buf, size_t capacity);

/**
 * Number of MFCC frames the default front end yields for `n_samples`.
 *
 * # Safety
 * `out_frames` must be a valid pointer.
 */
enum PpStatus pp_mfcc_frame_count(size_t n_samples, uint32_t sample_rate, size_t *out_frames);

/**
 * Default MFCC features (13 coefficients per frame) of a mono signal,
 * written row-major into `out`.
 *
 * # Safety
 * `samples` must hold `n_samples` values and `out` `out_capacity` values.
 */
enum PpStatus pp_mfcc(const double *samples,
                      size_t n_samples,
                      uint32_t sample_rate,
                      double *out,
                      size_t out_capacity,
                      size_t *out_frames,
                      size_t *out_dim);

/**
 * Adjusted Rand index of two labelings of `n` items.
 *
 * # Safety
 * `a` and `b` must each hold `n` values.
 */
enum PpStatus pp_adjusted_rand_index(const size_t *a, const size_t *b, size_t n, double *out);

/**
 * Sample Pearson correlation of two length-`n` vectors.
 *
 * # Safety
 * `x` and `y` must each hold `n` values.
 */
enum PpStatus pp_pearson_r(const double *x, const double *y, size_t n, double *out);

/**
 * Loads an encoder checkpoint.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PpStatus pp_encoder_load(const char *path, struct PpEncoder **out);

/**
 * Releases an encoder. Null is ignored.
 *
 * # Safety
 * `enc` must come from [`pp_encoder_load`] and not be used afterwards.
 */
void pp_encoder_free(struct PpEncoder *enc);

/**
 * Input width, embedding width and number of recurrent layers.
 *
 * # Safety
 * All pointers must be valid.
 */
enum PpStatus pp_encoder_dims(const struct PpEncoder *enc,
                              size_t *input_dim,
                              size_t *joint_dim,
                              size_t *rhn_layers);

/**
 * Encodes a `frames x dim` row-major feature matrix into a unit-norm
 * embedding of `joint_dim` values.
 *
 * # Safety
 * `features` must hold `frames * dim` values and `out` `out_capacity`.
 */
enum PpStatus pp_encoder_embed(const struct PpEncoder *enc,
                               const double *features,
                               size_t frames,
                               size_t dim,
                               double *out,
                               size_t out_capacity);

/**
 * Opens an archive directory, verifying every checksum.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PpStatus pp_archive_open(const char *path, struct PpArchive **out);

/**
 * Releases an archive. Null is ignored.
 *
 * # Safety
 * `archive` must come from [`pp_archive_open`] and not be used afterwards.
 */
void pp_archive_free(struct PpArchive *archive);

/**
 * Number of stimuli in a group (`val`, `abx` or `synonym`).
 *
 * # Safety
 * Pointers must be valid; `group` NUL-terminated.
 */
enum PpStatus pp_archive_item_count(const struct PpArchive *archive,
                                    const char *group,
                                    size_t *out);

/**
 * Shape of one stored matrix.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum PpStatus pp_archive_matrix_shape(const struct PpArchive *archive,
                                      const char *group,
                                      size_t index,
                                      const char *representation,
                                      size_t *rows,
                                      size_t *cols);

/**
 * Copies one stored matrix, row-major, into `out`.
 *
 * # Safety
 * Pointers must be valid; `out` must hold `out_capacity` values.
 */
enum PpStatus pp_archive_matrix_copy(const struct PpArchive *archive,
                                     const char *group,
                                     size_t index,
                                     const char *representation,
                                     double *out,
                                     size_t out_capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PHONOPROBE_H */
