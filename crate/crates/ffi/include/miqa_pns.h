#ifndef MIQA_PNS_H
#define MIQA_PNS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define PNS_MODE_BASELINE 0

#define PNS_MODE_MIQA_PNS 1

#define PNS_SCENARIO_IID 0

#define PNS_SCENARIO_LIMITED_HOLDOUT 1

#define PNS_SCENARIO_POOR_HOLDOUT 2

typedef enum PnsStatus {
  PNS_STATUS_OK = 0,
  PNS_STATUS_NULL_POINTER = 1,
  PNS_STATUS_INVALID_ARGUMENT = 2,
  PNS_STATUS_IO = 3,
  /**
   * A file is not a valid dataset or checkpoint.
   */
  PNS_STATUS_FORMAT = 4,
  /**
   * Training produced a non-finite loss.
   */
  PNS_STATUS_NUMERICAL = 5,
  PNS_STATUS_PANIC = 6,
} PnsStatus;

/**
 * Opaque dataset handle.
 */
typedef struct PnsDataset PnsDataset;

/**
 * Opaque model handle.
 */
typedef struct PnsModel PnsModel;

typedef struct PnsTrainOptions {
  /**
   * `PNS_MODE_BASELINE` or `PNS_MODE_MIQA_PNS`.
   */
  uint32_t mode;
  /**
   * One of the `PNS_SCENARIO_*` values; selects the train/val split.
   */
  uint32_t scenario;
  double lambda;
  double lr;
  size_t batch_size;
  size_t max_epochs;
  size_t patience;
  uint64_t seed;
} PnsTrainOptions;

typedef struct PnsMetrics {
  double precision;
  double recall;
  double f1;
  double deficient_accuracy;
  /**
   * Meaningful only when `has_pns` is nonzero.
   */
  double pns_proxy;
  double mono_violation;
  uint8_t has_pns;
  size_t n_samples;
} PnsMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *pns_last_error(void);

/**
 * Library defaults: miqa-pns mode, iid split, lambda 1, lr 1e-4, batch 32,
 * at most 200 epochs, patience 15, seed 0.
 */
struct PnsTrainOptions pns_train_options_default(void);

/**
 * Generates `n` synthetic images of `height` x `width` with the default
 * grade mix.
 *
 * # Safety
 * `out` must be null or point to writable storage for one pointer.
 */
enum PnsStatus pns_dataset_generate(size_t n,
                                    size_t height,
                                    size_t width,
                                    uint64_t seed,
                                    struct PnsDataset **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` as for [`pns_dataset_generate`].
 */
enum PnsStatus pns_dataset_load(const char *path, struct PnsDataset **out);

/**
 * # Safety
 * `dataset` must be a live handle; `path` a NUL-terminated string.
 */
enum PnsStatus pns_dataset_save(const struct PnsDataset *dataset, const char *path);

/**
 * Number of images, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t pns_dataset_len(const struct PnsDataset *dataset);

/**
 * # Safety
 * `dataset` must be null or a handle not yet freed.
 */
void pns_dataset_free(struct PnsDataset *dataset);

/**
 * Trains on the dataset's train/validation split with the default network
 * sizes and returns the best-epoch model (with `E^c`).
 *
 * # Safety
 * `dataset` must be a live handle, `options` null (defaults) or valid, and
 * `out` writable.
 */
enum PnsStatus pns_train(const struct PnsDataset *dataset,
                         const struct PnsTrainOptions *options,
                         struct PnsModel **out);

/**
 * Loads a checkpoint, keeping `E^c` when the file has it.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum PnsStatus pns_model_load(const char *path, struct PnsModel **out);

/**
 * Writes a checkpoint; a nonzero `inference_only` omits `E^c`.
 *
 * # Safety
 * `model` must be a live handle and `path` a NUL-terminated string.
 */
enum PnsStatus pns_model_save(const struct PnsModel *model,
                              const char *path,
                              uint8_t inference_only);

/**
 * 1 if the model still carries `E^c`, 0 otherwise (or for null).
 *
 * # Safety
 * `model` must be null or a live handle.
 */
uint8_t pns_model_has_complement(const struct PnsModel *model);

/**
 * Input width (pixels per image) the model expects, or 0 for null.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t pns_model_input_dim(const struct PnsModel *model);

/**
 * Writes `batch * 2` logits (Good, Deficient per row) of `F(E(x))` for
 * `batch` row-major images of `input_dim` pixels.
 *
 * # Safety
 * `inputs` must hold `batch * input_dim` doubles and `logits` room for
 * `batch * 2`.
 */
enum PnsStatus pns_model_predict(const struct PnsModel *model,
                                 const double *inputs,
                                 size_t batch,
                                 size_t input_dim,
                                 double *logits);

/**
 * Evaluates on the test split of `scenario` under `seed`. PNS fields are
 * filled only when the model has `E^c`.
 *
 * # Safety
 * `model` and `dataset` must be live handles and `out` writable.
 */
enum PnsStatus pns_evaluate(const struct PnsModel *model,
                            const struct PnsDataset *dataset,
                            uint32_t scenario,
                            uint64_t seed,
                            struct PnsMetrics *out);

/**
 * `mean(p_good_h) - mean(p_good_hbar)` over `n` probabilities.
 *
 * # Safety
 * Both arrays must hold `n` doubles; `out` must be writable.
 */
enum PnsStatus pns_pns_estimate(const double *p_good_h,
                                const double *p_good_hbar,
                                size_t n,
                                double *out);

/**
 * `mean((1 - p_good_h) * p_good_hbar)` over `n` probabilities.
 *
 * # Safety
 * As for [`pns_pns_estimate`].
 */
enum PnsStatus pns_monotonicity_violation(const double *p_good_h,
                                          const double *p_good_hbar,
                                          size_t n,
                                          double *out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void pns_model_free(struct PnsModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MIQA_PNS_H */
