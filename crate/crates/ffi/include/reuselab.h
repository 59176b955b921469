#ifndef REUSELAB_H
#define REUSELAB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  REUSELAB_STATUS_OK = 0,
  REUSELAB_STATUS_INVALID_ARGUMENT = 1,
  REUSELAB_STATUS_NULL_POINTER = 2,
  REUSELAB_STATUS_DIMENSION_MISMATCH = 3,
  REUSELAB_STATUS_MISSING_CLASS = 4,
  REUSELAB_STATUS_SINGULAR_DATA = 5,
  REUSELAB_STATUS_CONVERGENCE = 6,
  REUSELAB_STATUS_DEGENERATE_GRID = 7,
  REUSELAB_STATUS_EMPTY_CELL = 8,
  REUSELAB_STATUS_CONFIG = 9,
  REUSELAB_STATUS_PARSE = 10,
  REUSELAB_STATUS_IO = 11,
  REUSELAB_STATUS_BUFFER_TOO_SMALL = 12,
  REUSELAB_STATUS_PANIC = 13,
} ReuselabStatus;

// Opaque labelled dataset.
typedef struct ReuselabDataset ReuselabDataset;

// Opaque trained model.
typedef struct ReuselabModel ReuselabModel;

// Opaque IWAL selection over a dataset.
typedef struct ReuselabSelection ReuselabSelection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next reuselab call on the same thread.
const char *reuselab_last_error(void);

// Library version as a static NUL-terminated string.
const char *reuselab_version(void);

// Generates a synthetic dataset. `kind` is `uniform-line`,
// `four-cluster-line` or `circle`; `circle_prob` is ignored for the line
// generators.
//
// # Safety
// `kind` must be a NUL-terminated string and `out` a valid pointer.
ReuselabStatus reuselab_dataset_generate(const char *kind,
                                         size_t n,
                                         double circle_prob,
                                         uint64_t seed,
                                         ReuselabDataset **out);

// Builds a dataset from a row-major `n x dim` feature matrix and labels in
// {-1, +1}.
//
// # Safety
// `features` must hold `n * dim` values, `labels` `n` values.
ReuselabStatus reuselab_dataset_from_arrays(const double *features,
                                            const int8_t *labels,
                                            size_t n,
                                            size_t dim,
                                            ReuselabDataset **out);

// Loads a CSV with a header row; every non-label column is categorical
// unless listed in `numeric_columns` (comma-separated, may be null).
// `positive` is a comma-separated list of label values mapped to +1.
//
// # Safety
// String arguments must be NUL-terminated; `out` must be valid.
ReuselabStatus reuselab_dataset_load_csv(const char *path,
                                         const char *label_column,
                                         const char *positive,
                                         const char *numeric_columns,
                                         ReuselabDataset **out);

// Number of instances; 0 for a null handle.
//
// # Safety
// `dataset` must be null or a live handle.
size_t reuselab_dataset_len(const ReuselabDataset *dataset);

// Feature dimension; 0 for a null handle.
//
// # Safety
// `dataset` must be null or a live handle.
size_t reuselab_dataset_dim(const ReuselabDataset *dataset);

// Copies features (row-major) and labels into caller buffers of at least
// `len * dim` and `len` elements.
//
// # Safety
// Buffers must be writable for the stated sizes.
ReuselabStatus reuselab_dataset_copy(const ReuselabDataset *dataset,
                                     double *features,
                                     size_t features_len,
                                     int8_t *labels,
                                     size_t labels_len);

// # Safety
// `dataset` must be null or a handle not yet freed.
void reuselab_dataset_free(ReuselabDataset *dataset);

// IWAL selection probability with the natural logarithm.
double reuselab_selection_probability(double g, size_t k, double c0);

// One IWAL pass over `dataset` in stored order with default selector
// settings. `use_weights` = 0 gives the no-weights variant.
//
// # Safety
// `dataset` must be a live handle and `out` valid.
ReuselabStatus reuselab_select_iwal(const ReuselabDataset *dataset,
                                    double c0,
                                    uint64_t seed,
                                    int32_t use_weights,
                                    ReuselabSelection **out);

// Number of selected examples; 0 for a null handle.
//
// # Safety
// `selection` must be null or a live handle.
size_t reuselab_selection_len(const ReuselabSelection *selection);

// Copies selected dataset indices and their weights into caller buffers of
// at least `reuselab_selection_len` elements.
//
// # Safety
// Buffers must be writable for `capacity` elements.
ReuselabStatus reuselab_selection_copy(const ReuselabSelection *selection,
                                       size_t *indices,
                                       double *weights,
                                       size_t capacity);

// # Safety
// `selection` must be null or a handle not yet freed.
void reuselab_selection_free(ReuselabSelection *selection);

// Trains a consumer (`online-linear`, `least-squares`, `lda`, `qda`,
// `svm-linear`, `svm-poly3`, `svm-rbf`) with default hyperparameters. With
// a selection, trains on the selected examples of `dataset` at their
// weights; with a null selection, on all of `dataset` at weight 1.
//
// # Safety
// `kind` must be NUL-terminated, handles live or null as documented.
ReuselabStatus reuselab_model_fit(const char *kind,
                                  const ReuselabDataset *dataset,
                                  const ReuselabSelection *selection,
                                  ReuselabModel **out);

// Real-valued score of one feature vector; the prediction is its sign
// with ties to +1.
//
// # Safety
// `x` must hold `dim` values and `score` be writable.
ReuselabStatus reuselab_model_score(const ReuselabModel *model,
                                    const double *x,
                                    size_t dim,
                                    double *score);

// Zero-one error of `model` on `dataset`.
//
// # Safety
// Handles must be live and `error` writable.
ReuselabStatus reuselab_model_error(const ReuselabModel *model,
                                    const ReuselabDataset *dataset,
                                    double *error);

// Serialises a model to text. Release the string with
// [`reuselab_string_free`].
//
// # Safety
// `model` must be live and `out` writable.
ReuselabStatus reuselab_model_to_text(const ReuselabModel *model, char **out);

// Parses text produced by [`reuselab_model_to_text`].
//
// # Safety
// `text` must be NUL-terminated and `out` writable.
ReuselabStatus reuselab_model_from_text(const char *text, ReuselabModel **out);

// # Safety
// `model` must be null or a handle not yet freed.
void reuselab_model_free(ReuselabModel *model);

// # Safety
// `s` must be null or a string returned by this library and not yet freed.
void reuselab_string_free(char *s);

// Runs an experiment config (TOML) and writes its outputs to `out_dir`,
// as `reuselab run` does.
//
// # Safety
// Paths must be NUL-terminated strings.
ReuselabStatus reuselab_run_config(const char *config_path, const char *out_dir, size_t jobs);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REUSELAB_H */
