#ifndef REVERTRISK_H
#define REVERTRISK_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/*
 Result codes shared by every function in this library.
 */
typedef enum RrStatus {
  RR_STATUS_OK = 0,
  RR_STATUS_NULL_POINTER = 1,
  RR_STATUS_INVALID_UTF8 = 2,
  RR_STATUS_IO = 3,
  /*
   Malformed JSON or entity document.
   */
  RR_STATUS_PARSE = 4,
  /*
   Model files unreadable or built for another template version.
   */
  RR_STATUS_MODEL = 5,
  /*
   Parent and current documents describe different entities.
   */
  RR_STATUS_ENTITY_MISMATCH = 6,
  RR_STATUS_INVALID_ARGUMENT = 7,
  /*
   A Rust panic was caught at the boundary.
   */
  RR_STATUS_PANIC = 8,
} RrStatus;

/*
 An id-to-label map used for textualization.
 */
typedef struct RrLabelMap RrLabelMap;

/*
 Loaded models and label map. Immutable; safe to share across threads.
 */
typedef struct RrScorer RrScorer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL after a success.
 Valid until the next call into this library on the same thread.
 */
const char *rr_last_error_message(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *rr_version(void);

/*
 Loads the content model, final model and label map.

 # Safety
 Path arguments must be NUL-terminated strings; `out` must be writable.
 */
enum RrStatus rr_scorer_open(const char *content_model_path,
                             const char *final_model_path,
                             const char *labels_path,
                             struct RrScorer **out);

/*
 # Safety
 `scorer` must come from [`rr_scorer_open`] and not be used afterwards. NULL is ignored.
 */
void rr_scorer_free(struct RrScorer *scorer);

/*
 Revert probability for the edit turning `parent_json` into `current_json`.
 `parent_json` may be NULL for a page creation. `metadata_json` holds
 `timestamp`, `editor` and optionally `revision_id` and `previous_timestamp`.

 # Safety
 `scorer` must be a live handle; strings must be NUL-terminated; `out_probability` writable.
 */
enum RrStatus rr_score(const struct RrScorer *scorer,
                       const char *parent_json,
                       const char *current_json,
                       const char *metadata_json,
                       double *out_probability);

/*
 Like [`rr_score`] but writes the full breakdown (probability, pooled
 content score, per-change texts and scores, metadata features) as JSON.

 # Safety
 As for [`rr_score`]; `out_json` must be writable and its result freed with [`rr_string_free`].
 */
enum RrStatus rr_score_json(const struct RrScorer *scorer,
                            const char *parent_json,
                            const char *current_json,
                            const char *metadata_json,
                            char **out_json);

/*
 Content deltas between two entity documents, as a JSON array.

 # Safety
 Strings must be NUL-terminated (`parent_json` may be NULL); `out_json` writable.
 */
enum RrStatus rr_diff(const char *parent_json, const char *current_json, char **out_json);

/*
 Loads a tab-separated label map.

 # Safety
 `path` must be NUL-terminated; `out` writable.
 */
enum RrStatus rr_labels_load(const char *path, struct RrLabelMap **out);

/*
 Number of labels, or 0 for NULL.

 # Safety
 `labels` must be NULL or a live handle.
 */
size_t rr_labels_len(const struct RrLabelMap *labels);

/*
 # Safety
 `labels` must come from [`rr_labels_load`] and not be used afterwards. NULL is ignored.
 */
void rr_labels_free(struct RrLabelMap *labels);

/*
 Textualizes a JSON array of deltas into a JSON array of changes.
 `labels` may be NULL, in which case every identifier renders as `unknown`.

 # Safety
 `deltas_json` must be NUL-terminated; `labels` NULL or live; `out_json` writable.
 */
enum RrStatus rr_textualize(const char *deltas_json,
                            const struct RrLabelMap *labels,
                            char **out_json);

/*
 ROC AUC of `scores` against 0/1 `labels`, both of length `n`.

 # Safety
 `scores` and `labels` must point to `n` readable elements; `out_auc` writable.
 */
enum RrStatus rr_auc(const double *scores, const uint8_t *labels, size_t n, double *out_auc);

/*
 Releases a string returned by this library. NULL is ignored.

 # Safety
 `s` must come from this library and not be used afterwards.
 */
void rr_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* REVERTRISK_H */
