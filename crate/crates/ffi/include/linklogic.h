#ifndef LINKLOGIC_H
#define LINKLOGIC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. Non-zero codes below 4 match the command-line exit codes.
 */
typedef enum LlStatus {
  LL_OK = 0,
  LL_ERR_RUNTIME = 1,
  /**
   * Bad input data or an unknown entity or relation.
   */
  LL_ERR_INPUT = 2,
  LL_ERR_CONFIG = 3,
  /**
   * A required pointer argument was null.
   */
  LL_ERR_NULL = 4,
  /**
   * A string argument was not valid UTF-8.
   */
  LL_ERR_UTF8 = 5,
  /**
   * The library panicked; the handle arguments should not be reused.
   */
  LL_ERR_PANIC = 6,
} LlStatus;

/**
 * A prepared dataset directory.
 */
typedef struct LlDataset LlDataset;

/**
 * Embeddings checked against a dataset's vocabulary.
 */
typedef struct LlEmbeddings LlEmbeddings;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or "" after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ll_last_error(void);

/**
 * Open a dataset directory written by `linklogic prepare` or `synth`.
 *
 * # Safety
 * `dir` must be a NUL-terminated string and `out` a writable pointer.
 */
enum LlStatus ll_dataset_open(const char *dir, struct LlDataset **out);

/**
 * Release a dataset. Null is ignored.
 *
 * # Safety
 * `dataset` must be null or a handle from [`ll_dataset_open`] not yet freed.
 */
void ll_dataset_free(struct LlDataset *dataset);

/**
 * Number of entities in the dataset, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t ll_entity_count(const struct LlDataset *dataset);

/**
 * Load an embedding file and check it against the dataset's names.
 *
 * # Safety
 * `dataset` must be a live handle, `path` a NUL-terminated string and
 * `out` a writable pointer.
 */
enum LlStatus ll_embeddings_load(const struct LlDataset *dataset,
                                 const char *path,
                                 struct LlEmbeddings **out);

/**
 * Release embeddings. Null is ignored.
 *
 * # Safety
 * `embeddings` must be null or a handle from [`ll_embeddings_load`] not yet freed.
 */
void ll_embeddings_free(struct LlEmbeddings *embeddings);

/**
 * Plausibility in (0, 1) of the triple named by `head`, `relation`, `tail`.
 *
 * # Safety
 * Handles must be live, names NUL-terminated and `out` writable.
 */
enum LlStatus ll_score(const struct LlDataset *dataset,
                       const struct LlEmbeddings *embeddings,
                       const char *head,
                       const char *relation,
                       const char *tail,
                       double *out);

/**
 * Explain `query` ("head relation tail") with LinkLogic and return the
 * explanation as JSON. `config` is null or a flat TOML document with the
 * same keys as `linklogic explain`.
 *
 * # Safety
 * Handles must be live, strings NUL-terminated or (for `config`) null,
 * and `out` writable.
 */
enum LlStatus ll_explain_json(const struct LlDataset *dataset,
                              const struct LlEmbeddings *embeddings,
                              const char *query,
                              const char *config,
                              char **out);

/**
 * Same as [`ll_explain_json`] for the path score heuristic.
 *
 * # Safety
 * As for [`ll_explain_json`].
 */
enum LlStatus ll_heuristic_json(const struct LlDataset *dataset,
                                const struct LlEmbeddings *embeddings,
                                const char *query,
                                const char *config,
                                char **out);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void ll_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LINKLOGIC_H */
