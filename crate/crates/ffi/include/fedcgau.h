#ifndef FEDCGAU_H
#define FEDCGAU_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes shared by every entry point.
 */
typedef enum FcStatus {
  FC_STATUS_OK = 0,
  FC_STATUS_NULL_POINTER = 1,
  FC_STATUS_INVALID_ARGUMENT = 2,
  FC_STATUS_DIMENSION = 3,
  FC_STATUS_NUMERICAL = 4,
  FC_STATUS_INSUFFICIENT_DATA = 5,
  FC_STATUS_PARSE = 6,
  FC_STATUS_IO = 7,
  FC_STATUS_BUFFER_TOO_SMALL = 8,
  FC_STATUS_PANIC = 9,
} FcStatus;

/**
 * Opaque labelled embedding dataset.
 */
typedef struct FcDataset FcDataset;

/**
 * Opaque trained classifier.
 */
typedef struct FcModel FcModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *fc_version(void);

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next `fc_*` call on the same thread.
 */
const char *fc_last_error(void);

/**
 * Reads a `.emb1` or `.csv` dataset.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum FcStatus fc_dataset_read(const char *path, struct FcDataset **out);

/**
 * Writes a dataset; the format follows the extension (`.emb1` or `.csv`).
 *
 * # Safety
 * `dataset` must come from this library; `path` must be NUL-terminated.
 */
enum FcStatus fc_dataset_write(const struct FcDataset *dataset, const char *path);

/**
 * Builds a dataset from row-major `n × dim` features and `n` labels.
 *
 * # Safety
 * `features` must hold `n · dim` values and `labels` `n` values.
 */
enum FcStatus fc_dataset_from_arrays(const double *features,
                                     const uint32_t *labels,
                                     size_t n,
                                     size_t dim,
                                     size_t num_classes,
                                     struct FcDataset **out);

/**
 * Generates lattice blobs (see the core `synth_blobs`).
 *
 * # Safety
 * `out` must be writable.
 */
enum FcStatus fc_synth_blobs(size_t num_classes,
                             size_t blobs_per_class,
                             size_t samples_per_blob,
                             size_t dim,
                             double separation,
                             double spread,
                             uint64_t seed,
                             struct FcDataset **out);

/**
 * Releases a dataset. Null is ignored.
 *
 * # Safety
 * `dataset` must come from this library and not be used afterwards.
 */
void fc_dataset_free(struct FcDataset *dataset);

/**
 * Sample count, or 0 for null.
 *
 * # Safety
 * `dataset` must be null or come from this library.
 */
size_t fc_dataset_len(const struct FcDataset *dataset);

/**
 * Feature dimension, or 0 for null.
 *
 * # Safety
 * `dataset` must be null or come from this library.
 */
size_t fc_dataset_dim(const struct FcDataset *dataset);

/**
 * Class count, or 0 for null.
 *
 * # Safety
 * `dataset` must be null or come from this library.
 */
size_t fc_dataset_num_classes(const struct FcDataset *dataset);

/**
 * Copies row-major features into `out` (`capacity ≥ len · dim`).
 *
 * # Safety
 * `out` must hold `capacity` values.
 */
enum FcStatus fc_dataset_features(const struct FcDataset *dataset, double *out, size_t capacity);

/**
 * Copies labels into `out` (`capacity ≥ len`).
 *
 * # Safety
 * `out` must hold `capacity` values.
 */
enum FcStatus fc_dataset_labels(const struct FcDataset *dataset, uint32_t *out, size_t capacity);

/**
 * Squared Fréchet distance between the Gaussian summaries (mean, unbiased
 * covariance) of two row-major sample sets with `dim` columns.
 *
 * # Safety
 * `x1` must hold `n1 · dim` values and `x2` `n2 · dim` values.
 */
enum FcStatus fc_frechet_distance_sq(const double *x1,
                                     size_t n1,
                                     const double *x2,
                                     size_t n2,
                                     size_t dim,
                                     double *out);

/**
 * Γ of `dataset` in its full feature space under `assignment` (one client
 * id below `num_clients` per sample). `per_client` may be null; otherwise
 * it receives `num_clients` distances.
 *
 * # Safety
 * `assignment` must hold `fc_dataset_len(dataset)` values and `per_client`,
 * when not null, `num_clients` values.
 */
enum FcStatus fc_gamma(const struct FcDataset *dataset,
                       const uint32_t *assignment,
                       size_t num_clients,
                       double *gamma,
                       double *per_client);

/**
 * Simulated non-IID assignment of `dataset` to `num_clients` clients with a
 * `proportion` of samples reassigned uniformly at random.
 *
 * # Safety
 * `assignment` must hold `capacity ≥ fc_dataset_len(dataset)` values.
 */
enum FcStatus fc_simulate_clients(const struct FcDataset *dataset,
                                  size_t num_clients,
                                  double proportion,
                                  uint64_t seed,
                                  uint32_t *assignment,
                                  size_t capacity);

/**
 * Loads a model checkpoint.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
enum FcStatus fc_model_load(const char *path, struct FcModel **out);

/**
 * Saves a model checkpoint.
 *
 * # Safety
 * `model` must come from this library; `path` must be NUL-terminated.
 */
enum FcStatus fc_model_save(const struct FcModel *model, const char *path);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void fc_model_free(struct FcModel *model);

/**
 * Expected input width, or 0 for null.
 *
 * # Safety
 * `model` must be null or come from this library.
 */
size_t fc_model_input_dim(const struct FcModel *model);

/**
 * Logits per sample (1 for binary tasks, C otherwise), or 0 for null.
 *
 * # Safety
 * `model` must be null or come from this library.
 */
size_t fc_model_output_dim(const struct FcModel *model);

/**
 * Client count of a conditioned model; 0 for unconditioned models or null.
 *
 * # Safety
 * `model` must be null or come from this library.
 */
size_t fc_model_num_clients(const struct FcModel *model);

/**
 * Evaluation-mode logits for `n` row-major inputs, all from `client`.
 * Unconditioned models ignore `client`.
 *
 * # Safety
 * `x` must hold `n · dim` values and `logits` `capacity` values.
 */
enum FcStatus fc_model_predict(const struct FcModel *model,
                               const double *x,
                               size_t n,
                               size_t dim,
                               size_t client,
                               double *logits,
                               size_t capacity);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FEDCGAU_H */
