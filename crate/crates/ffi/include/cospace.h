#ifndef COSPACE_H
#define COSPACE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum CospaceMethod {
  COSPACE_METHOD_RAW = 0,
  COSPACE_METHOD_COSPACE_L2 = 1,
  COSPACE_METHOD_COSPACE_L1 = 2,
  COSPACE_METHOD_PJDR = 3,
  COSPACE_METHOD_LUSMA = 4,
  COSPACE_METHOD_LSMA = 5,
} CospaceMethod;

typedef enum CospaceStatus {
  COSPACE_STATUS_OK = 0,
  COSPACE_STATUS_NULL_POINTER = 1,
  COSPACE_STATUS_INVALID_ARGUMENT = 2,
  COSPACE_STATUS_DIMENSION_MISMATCH = 3,
  COSPACE_STATUS_NUMERIC = 4,
  COSPACE_STATUS_IO = 5,
  COSPACE_STATUS_FORMAT = 6,
  COSPACE_STATUS_PANIC = 7,
} CospaceStatus;

/**
 * Opaque paired dataset.
 */
typedef struct CospaceDataset CospaceDataset;

/**
 * Opaque fitted model.
 */
typedef struct CospaceModel CospaceModel;

/**
 * Method and hyperparameters; start from `cospace_params_default`.
 */
typedef struct CospaceParams {
  enum CospaceMethod method;
  size_t dim;
  double alpha;
  double beta;
  size_t k;
  double sigma;
  size_t max_iter;
  double zeta;
  /**
   * Non-zero: standardise each modality with training statistics.
   */
  int32_t standardize;
} CospaceParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or null. Valid until
 * the next failing call on the same thread.
 */
const char *cospace_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *cospace_version(void);

struct CospaceParams cospace_params_default(enum CospaceMethod method);

/**
 * Copies paired data into a new dataset. `x1` is `d1 × n`, `x2` is `d2 × n`,
 * `labels` holds `n` class indices below `num_classes`.
 */
enum CospaceStatus cospace_dataset_new(const double *x1,
                                       size_t d1,
                                       const double *x2,
                                       size_t d2,
                                       const uint32_t *labels,
                                       size_t n,
                                       size_t num_classes,
                                       struct CospaceDataset **out);

/**
 * Loads a dataset through a JSON manifest.
 */
enum CospaceStatus cospace_dataset_load(const char *manifest, struct CospaceDataset **out);

size_t cospace_dataset_num_samples(const struct CospaceDataset *data);

void cospace_dataset_free(struct CospaceDataset *data);

/**
 * Fits a model on both modalities of `data`.
 */
enum CospaceStatus cospace_fit(const struct CospaceDataset *data,
                               const struct CospaceParams *params,
                               struct CospaceModel **out);

enum CospaceStatus cospace_model_load(const char *path, struct CospaceModel **out);

enum CospaceStatus cospace_model_save(const struct CospaceModel *model, const char *path);

void cospace_model_free(struct CospaceModel *model);

/**
 * Input and feature dimensions for `modality`, plus the class count. Any
 * output pointer may be null.
 */
enum CospaceStatus cospace_model_dims(const struct CospaceModel *model,
                                      uint8_t modality,
                                      size_t *input_dim,
                                      size_t *feature_dim,
                                      size_t *num_classes);

/**
 * Maps `n` samples of one modality into the shared space. `out` must hold
 * `feature_dim * n` values; it is filled column-major.
 */
enum CospaceStatus cospace_project(const struct CospaceModel *model,
                                   uint8_t modality,
                                   const double *x,
                                   size_t n,
                                   double *out,
                                   size_t out_len);

/**
 * Predicts class indices for `n` samples of one modality into `out[0..n]`.
 */
enum CospaceStatus cospace_predict(const struct CospaceModel *model,
                                   uint8_t modality,
                                   const double *x,
                                   size_t n,
                                   uint32_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COSPACE_H */
