#ifndef SYMCERE_H
#define SYMCERE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  SYMC_STATUS_OK = 0,
  /**
   * Bad configuration or argument value.
   */
  SYMC_STATUS_CONFIG = 1,
  /**
   * Unreadable, malformed or inconsistent input.
   */
  SYMC_STATUS_DATA = 2,
  /**
   * Non-finite values or degenerate norms during computation.
   */
  SYMC_STATUS_NUMERIC = 3,
  /**
   * A required pointer was NULL or a string was not UTF-8.
   */
  SYMC_STATUS_INVALID_ARGUMENT = 4,
  /**
   * The caller's buffer is smaller than the result.
   */
  SYMC_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * Internal failure; the handle involved should be freed.
   */
  SYMC_STATUS_PANIC = 6,
} SymcStatus;

/**
 * A split interaction set with its text embeddings.
 */
typedef struct SymcDataset SymcDataset;

typedef struct SymcTrainer SymcTrainer;

/**
 * Per-epoch loss means, mirroring the training log.
 */
typedef struct {
  uint64_t epoch;
  double cross_modal;
  double intra_modal;
  double bpr;
  double param_sq_norm;
  double total;
} SymcEpochLosses;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *symc_version(void);

/**
 * Message of the last failure on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *symc_last_error(void);

/**
 * Opens a prepared dataset directory. The directory must hold text
 * embeddings.
 *
 * # Safety
 * `dir` must be a valid NUL-terminated string and `out` a valid pointer.
 */
SymcStatus symc_dataset_load(const char *dir, SymcDataset **out);

/**
 * Generates a planted-cluster synthetic dataset from the `[synth]` section
 * of `config_toml` (NULL for defaults).
 *
 * # Safety
 * `config_toml` must be NULL or a valid NUL-terminated string; `out` must be valid.
 */
SymcStatus symc_dataset_synthesize(const char *config_toml, SymcDataset **out);

/**
 * # Safety
 * `ds` must be valid and every non-NULL output pointer writable.
 */
SymcStatus symc_dataset_shape(const SymcDataset *ds,
                              size_t *num_users,
                              size_t *num_items,
                              size_t *num_train,
                              size_t *num_test);

/**
 * # Safety
 * `ds` must be NULL or a handle from this library not yet freed.
 */
void symc_dataset_free(SymcDataset *ds);

/**
 * Fresh trainer on the dataset's train partition with the `[model]`,
 * `[loss]` and `[train]` sections of `config_toml` (NULL for defaults).
 * The dataset may be freed afterwards.
 *
 * # Safety
 * `ds` must be valid; `config_toml` NULL or NUL-terminated; `out` valid.
 */
SymcStatus symc_trainer_new(const SymcDataset *ds, const char *config_toml, SymcTrainer **out);

/**
 * Restores a trainer from a checkpoint file using the config stored in it.
 *
 * # Safety
 * `ds` must be valid; `path` NUL-terminated; `out` valid.
 */
SymcStatus symc_trainer_load(const SymcDataset *ds, const char *path, SymcTrainer **out);

/**
 * Runs one epoch; `losses` may be NULL.
 *
 * # Safety
 * `tr` must be valid; `losses` NULL or writable.
 */
SymcStatus symc_trainer_train_epoch(SymcTrainer *tr, SymcEpochLosses *losses);

/**
 * HR@k and NDCG@k on the dataset's held-out split, macro-averaged.
 *
 * # Safety
 * `tr` and `ds` must be valid; `hr` and `ndcg` NULL or writable.
 */
SymcStatus symc_trainer_evaluate(const SymcTrainer *tr,
                                 const SymcDataset *ds,
                                 size_t k,
                                 double *hr,
                                 double *ndcg);

/**
 * Copies the node embeddings (users, then items; row-major) into `buf`.
 * `rows` and `cols` are always written; pass `buf = NULL` to query the size.
 *
 * # Safety
 * `tr` must be valid; `buf` NULL or writable for `len` doubles; `rows`/`cols` writable.
 */
SymcStatus symc_trainer_embeddings(const SymcTrainer *tr,
                                   double *buf,
                                   size_t len,
                                   size_t *rows,
                                   size_t *cols);

/**
 * # Safety
 * `tr` must be valid; `path` NUL-terminated.
 */
SymcStatus symc_trainer_save(const SymcTrainer *tr, const char *path);

/**
 * # Safety
 * `tr` must be NULL or a handle from this library not yet freed.
 */
void symc_trainer_free(SymcTrainer *tr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SYMCERE_H */
