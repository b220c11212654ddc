#ifndef DOCSIFT_H
#define DOCSIFT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum DocsiftStatus {
  DOCSIFT_STATUS_OK = 0,
  /**
   * A required pointer argument was NULL.
   */
  DOCSIFT_STATUS_NULL_ARGUMENT = 1,
  DOCSIFT_STATUS_INVALID_UTF8 = 2,
  /**
   * Bad parameter, malformed filter JSON, or a query with no usable terms.
   */
  DOCSIFT_STATUS_INVALID_INPUT = 3,
  /**
   * Unknown article id, or no history id is indexed.
   */
  DOCSIFT_STATUS_NOT_FOUND = 4,
  /**
   * Truncated archive, checksum mismatch or inconsistent sections.
   */
  DOCSIFT_STATUS_ARCHIVE_CORRUPT = 5,
  /**
   * Archive written by an unsupported schema version.
   */
  DOCSIFT_STATUS_UNSUPPORTED_VERSION = 6,
  DOCSIFT_STATUS_IO = 7,
  DOCSIFT_STATUS_RUNTIME = 8,
  /**
   * A Rust panic was caught at the boundary.
   */
  DOCSIFT_STATUS_PANIC = 9,
} DocsiftStatus;

/**
 * Opaque handle to a loaded archive.
 */
typedef struct DocsiftArchive DocsiftArchive;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *docsift_version(void);

/**
 * Message for the last failed call on this thread, or NULL after a
 * success. Valid until the next docsift call on the same thread.
 */
const char *docsift_last_error_message(void);

/**
 * Loads and verifies an archive. On success `*out` receives a handle to
 * release with [`docsift_archive_free`].
 *
 * # Safety
 * `path` must be NULL or a NUL-terminated string; `out` must be NULL or
 * writable.
 */
enum DocsiftStatus docsift_archive_open(const char *path, struct DocsiftArchive **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `handle` must come from [`docsift_archive_open`] and not be used again.
 */
void docsift_archive_free(struct DocsiftArchive *handle);

/**
 * Number of indexed articles, or 0 for a NULL handle.
 *
 * # Safety
 * `handle` must be NULL or a live handle.
 */
size_t docsift_archive_len(const struct DocsiftArchive *handle);

/**
 * Classifies `text`. Writes `{"labels": [...], "scores": {label: score}}`.
 *
 * # Safety
 * Pointers must be NULL or valid; `text` NUL-terminated.
 */
enum DocsiftStatus docsift_classify(const struct DocsiftArchive *handle,
                                    const char *text,
                                    char **out_json);

/**
 * Ranks indexed articles against free text. `filters_json` may be NULL or
 * an object with `date_from`, `date_to`, `labels`, `min_citations`.
 *
 * # Safety
 * Pointers must be NULL or valid; strings NUL-terminated.
 */
enum DocsiftStatus docsift_recommend_text(const struct DocsiftArchive *handle,
                                          const char *text,
                                          size_t k,
                                          const char *filters_json,
                                          char **out_json);

/**
 * Ranks indexed articles against an indexed article, excluding itself.
 *
 * # Safety
 * As [`docsift_recommend_text`].
 */
enum DocsiftStatus docsift_recommend_id(const struct DocsiftArchive *handle,
                                        const char *id,
                                        size_t k,
                                        const char *filters_json,
                                        char **out_json);

/**
 * Ranks against the mean of a reading history of `n_ids` article ids.
 *
 * # Safety
 * `ids` must point to `n_ids` NUL-terminated strings.
 */
enum DocsiftStatus docsift_recommend_profile(const struct DocsiftArchive *handle,
                                             const char *const *ids,
                                             size_t n_ids,
                                             size_t k,
                                             const char *filters_json,
                                             char **out_json);

/**
 * Frees a string returned through `out_json`. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void docsift_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOCSIFT_H */
