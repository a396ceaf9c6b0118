#ifndef SGMASK_H
#define SGMASK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define SGM_OK 0

/**
 * A required pointer argument was NULL.
 */
#define SGM_ERR_NULL 1

/**
 * An argument or configuration value is out of range.
 */
#define SGM_ERR_INVALID 2

/**
 * File could not be read, written or parsed.
 */
#define SGM_ERR_IO 3

/**
 * Image or mask dimensions disagree.
 */
#define SGM_ERR_DIMENSION 4

/**
 * Internal panic caught at the boundary.
 */
#define SGM_ERR_PANIC 5

#define SGM_VARIANT_G 0

#define SGM_VARIANT_SG 1

#define SGM_MODE_FULL 0

#define SGM_MODE_BATCH 1

#define SGM_DECODER_ZERO_FILL 0

#define SGM_DECODER_IST 1

#define SGM_METRIC_PSNR 0

#define SGM_METRIC_SSIM 1

#define SGM_METRIC_NEGMSE 2

/**
 * Opaque dynamic image (N x N x T complex).
 */
typedef struct SgmImage SgmImage;

/**
 * Opaque ordered line mask.
 */
typedef struct SgmMask SgmMask;

/**
 * Design-loop settings. IST uses its default parameters.
 */
typedef struct {
  /**
   * `SGM_VARIANT_G` or `SGM_VARIANT_SG`.
   */
  int32_t variant;
  /**
   * `SGM_MODE_FULL` (all training images) or `SGM_MODE_BATCH`.
   */
  int32_t mode;
  /**
   * Lines in the final mask.
   */
  uint32_t budget;
  /**
   * Candidate rows per step (SG only).
   */
  uint32_t sample_batch;
  /**
   * Training images per step (batch mode only).
   */
  uint32_t train_batch;
  uint64_t seed;
  int32_t decoder;
  int32_t metric;
} SgmDesignOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty after a success.
 * The pointer stays valid until the next call on this thread.
 */
const char *sgm_last_error(void);

/**
 * Renders the default moving-disk phantom, normalized to peak magnitude 1.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
int32_t sgm_phantom_new(uint32_t n, uint32_t frames, uint64_t seed, SgmImage **out);

/**
 * Builds an image from `2 * n * n * frames` interleaved (re, im) doubles in
 * frame-major, row-major order.
 *
 * # Safety
 * `data` must point to `len` readable doubles; `out` must be writable.
 */
int32_t sgm_image_from_data(uint32_t n,
                            uint32_t frames,
                            const double *data,
                            size_t len,
                            SgmImage **out);

/**
 * Reads a volume file (and its `.meta` sidecar, if present).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
int32_t sgm_volume_load(const char *path, SgmImage **out);

/**
 * Writes a volume file and its sidecar.
 *
 * # Safety
 * `image` must be a live handle; `path` a NUL-terminated string.
 */
int32_t sgm_volume_save(const SgmImage *image, const char *path);

/**
 * # Safety
 * `image` must be NULL or a live handle not used afterwards.
 */
void sgm_image_free(SgmImage *image);

/**
 * # Safety
 * `image` must be a live handle; `n` and `frames` writable.
 */
int32_t sgm_image_dims(const SgmImage *image, uint32_t *n, uint32_t *frames);

/**
 * Copies the samples as interleaved (re, im) doubles; `len` must equal
 * `2 * n * n * frames`.
 *
 * # Safety
 * `image` must be a live handle; `out` must point to `len` writable doubles.
 */
int32_t sgm_image_copy_data(const SgmImage *image, double *out, size_t len);

/**
 * Runs the greedy design loop on `count` training images.
 *
 * # Safety
 * `training` must point to `count` live image handles; `options` must be
 * valid; `out` writable; `decoder_calls` NULL or writable.
 */
int32_t sgm_design(const SgmImage *const *training,
                   size_t count,
                   const SgmDesignOptions *options,
                   SgmMask **out,
                   uint64_t *decoder_calls);

/**
 * # Safety
 * `mask` must be NULL or a live handle not used afterwards.
 */
void sgm_mask_free(SgmMask *mask);

/**
 * # Safety
 * `mask` must be a live handle; `len` writable.
 */
int32_t sgm_mask_len(const SgmMask *mask, size_t *len);

/**
 * Line `index` in acquisition order.
 *
 * # Safety
 * `mask` must be a live handle; `frame` and `row` writable.
 */
int32_t sgm_mask_line(const SgmMask *mask, size_t index, uint32_t *frame, uint32_t *row);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` writable.
 */
int32_t sgm_mask_load(const char *path, SgmMask **out);

/**
 * # Safety
 * `mask` must be a live handle; `path` a NUL-terminated string.
 */
int32_t sgm_mask_save(const SgmMask *mask, const char *path);

/**
 * Mean metric over `count` volumes reconstructed from `mask`.
 *
 * # Safety
 * `mask` must be a live handle; `volumes` must point to `count` live image
 * handles; `mean` writable.
 */
int32_t sgm_evaluate(const SgmMask *mask,
                     const SgmImage *const *volumes,
                     size_t count,
                     int32_t decoder,
                     int32_t metric,
                     double *mean);

/**
 * Theoretical decoder-call reduction of SG-v2 over G-v1,
 * `(m / l) * (N T / k)`, as a reduced fraction.
 *
 * # Safety
 * `numer` and `denom` must be writable.
 */
int32_t sgm_speedup(uint32_t n,
                    uint32_t frames,
                    uint32_t m,
                    uint32_t k,
                    uint32_t l,
                    uint64_t *numer,
                    uint64_t *denom);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SGMASK_H */
