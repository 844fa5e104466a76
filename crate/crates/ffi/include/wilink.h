#ifndef WILINK_H
#define WILINK_H

/* Generated with cbindgen:0.27.0 */

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every exported function.
 */
typedef enum WlStatus {
  WL_STATUS_OK = 0,
  WL_STATUS_INVALID_ARGUMENT = 1,
  WL_STATUS_DATA = 2,
  WL_STATUS_NUMERIC = 3,
  WL_STATUS_NULL_POINTER = 4,
  WL_STATUS_PANIC = 5,
} WlStatus;

/**
 * A dataset directory; features are computed on first use and cached.
 */
typedef struct WlDataset WlDataset;

/**
 * Trained or freshly initialised networks of one case.
 */
typedef struct WlModel WlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next call into this library from the same thread.
 */
const char *wl_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wl_version(void);

/**
 * Number of activity classes, i.e. the length of probability outputs.
 */
size_t wl_num_classes(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void wl_string_free(char *s);

/**
 * Synthesises a dataset into `out_dir`. `config` is the text of a flat
 * `key = value` configuration, or null for defaults.
 *
 * # Safety
 * String arguments must be null or valid NUL-terminated strings.
 */
enum WlStatus wl_generate(const char *config, const char *out_dir, uint64_t seed);

/**
 * Opens a dataset directory.
 *
 * # Safety
 * `dir` must be a valid string; `out` a valid pointer.
 */
enum WlStatus wl_dataset_open(const char *dir, struct WlDataset **out);

/**
 * # Safety
 * `ds` must be null or a handle from [`wl_dataset_open`] not yet freed.
 */
void wl_dataset_free(struct WlDataset *ds);

/**
 * Sample counts of both splits and the number of links.
 *
 * # Safety
 * `ds` must be a live handle; out pointers may be null.
 */
enum WlStatus wl_dataset_info(const struct WlDataset *ds,
                              size_t *train,
                              size_t *test,
                              size_t *links);

/**
 * SHA-256 of the dataset directory as a hex string; free with
 * [`wl_string_free`].
 *
 * # Safety
 * `ds` must be a live handle and `out` a valid pointer.
 */
enum WlStatus wl_dataset_hash(const struct WlDataset *ds, char **out);

/**
 * Untrained networks for `case_number` (1..=5) with classifier `cnn` (1..=4).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum WlStatus wl_model_new(uint32_t case_number,
                           uint32_t cnn,
                           size_t num_links,
                           uint64_t seed,
                           struct WlModel **out);

/**
 * Loads a checkpoint directory.
 *
 * # Safety
 * `dir` must be a valid string; `out` a valid pointer.
 */
enum WlStatus wl_model_load(const char *dir, struct WlModel **out);

/**
 * Writes a checkpoint; `hash_out`, if not null, receives its SHA-256 (free
 * with [`wl_string_free`]).
 *
 * # Safety
 * `model` must be a live handle and `dir` a valid string.
 */
enum WlStatus wl_model_save(const struct WlModel *model, const char *dir, char **hash_out);

/**
 * # Safety
 * `model` must be null or a handle from this library not yet freed.
 */
void wl_model_free(struct WlModel *model);

/**
 * Case number (1..=5) of a model.
 *
 * # Safety
 * `model` must be a live handle; `case_out` a valid pointer.
 */
enum WlStatus wl_model_case(const struct WlModel *model, uint32_t *case_out);

/**
 * Trains case `case_number` on the train split. `epochs == 0` keeps the case default.
 * On a numeric failure the status is `Numeric` and `out` still receives
 * the last good weights.
 *
 * # Safety
 * `ds` must be a live handle and `out` a valid pointer.
 */
enum WlStatus wl_train(struct WlDataset *ds,
                       uint32_t case_number,
                       uint32_t cnn,
                       size_t epochs,
                       uint64_t seed,
                       struct WlModel **out);

/**
 * Evaluates on the test split and returns the JSON report (free with
 * [`wl_string_free`]).
 *
 * # Safety
 * Handles must be live and `json_out` a valid pointer.
 */
enum WlStatus wl_evaluate(const struct WlModel *model,
                          struct WlDataset *ds,
                          uint64_t seed,
                          char **json_out);

/**
 * Prediction for test sample `index`: the class, its probability vector
 * (`probs` holds [`wl_num_classes`] doubles) and the selected links
 * (`links` holds one byte per link, 1 when selected). `probs` and `links`
 * may be null.
 *
 * # Safety
 * Handles must be live; non-null buffers must have the stated lengths.
 */
enum WlStatus wl_predict(const struct WlModel *model,
                         struct WlDataset *ds,
                         size_t index,
                         uint64_t seed,
                         uint32_t *class_out,
                         double *probs,
                         uint8_t *links);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WILINK_H */
