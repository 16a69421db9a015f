#ifndef TEMPOQ_H
#define TEMPOQ_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TqStatus {
  TQ_STATUS_OK = 0,
  TQ_STATUS_NULL_ARGUMENT = 1,
  TQ_STATUS_INVALID_UTF8 = 2,
  TQ_STATUS_PARSE = 3,
  TQ_STATUS_INVALID = 4,
  TQ_STATUS_IO = 5,
  TQ_STATUS_ENGINE = 6,
  TQ_STATUS_PANIC = 7,
} TqStatus;

typedef enum TqVariant {
  TQ_VARIANT_INTEMPO = 0,
  TQ_VARIANT_INTEMPO_PLUS = 1,
} TqVariant;

typedef enum TqEventKind {
  TQ_EVENT_KIND_ER = 0,
  TQ_EVENT_KIND_IV = 1,
  TQ_EVENT_KIND_RE = 2,
} TqEventKind;

// An adaptation loop over the healthcare scenario.
typedef struct TqLoop TqLoop;

// A runtime model with history loaded from a snapshot.
typedef struct TqModel TqModel;

// A compiled query bound to the type graph of the model it was created for.
typedef struct TqQuery TqQuery;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *tq_last_error(void);

// Library version as a static NUL-terminated string.
const char *tq_version(void);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and must not be used afterwards.
void tq_string_free(char *s);

// Loads a model from snapshot JSON.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum TqStatus tq_model_from_json(const char *json, struct TqModel **out);

// Number of elements in the model, including deleted ones that were not pruned.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum TqStatus tq_model_element_count(const struct TqModel *model, size_t *out);

// # Safety
// `model` must come from [`tq_model_from_json`] and not be used afterwards.
void tq_model_free(struct TqModel *model);

// Compiles query `name` (the first query when null) from `source` against
// the model's type graph.
//
// # Safety
// Pointers must be valid; `name` may be null.
enum TqStatus tq_query_new(const struct TqModel *model,
                           const char *source,
                           const char *name,
                           struct TqQuery **out);

// Cut-off point and future horizon of the query, in time units.
//
// # Safety
// `query` must be a live handle; output pointers must be valid.
enum TqStatus tq_query_bounds(const struct TqQuery *query, uint64_t *cutoff, uint64_t *horizon);

// Evaluates the query over the model and writes the classified match report
// as JSON to `out`.
//
// # Safety
// Handles must be live; `out` must be valid.
enum TqStatus tq_query_execute(struct TqQuery *query,
                               const struct TqModel *model,
                               uint64_t now,
                               char **out);

// Evaluates the query with the brute-force checker up to `horizon` and
// writes the result as JSON to `out`.
//
// # Safety
// Handles must be live; `out` must be valid.
enum TqStatus tq_oracle_evaluate(const struct TqQuery *query,
                                 const struct TqModel *model,
                                 uint64_t horizon,
                                 char **out);

// # Safety
// `query` must come from [`tq_query_new`] and not be used afterwards.
void tq_query_free(struct TqQuery *query);

// Creates an adaptation loop with the bundled sepsis queries.
//
// # Safety
// `out` must be a valid pointer.
enum TqStatus tq_loop_new(enum TqVariant variant_, uint64_t period, struct TqLoop **out);

// Feeds one event into the loop's model. `applied` is set to 0 when the
// event was skipped (for example for an unknown patient).
//
// # Safety
// `lp` must be a live handle, `patient` a NUL-terminated string; `applied`
// may be null.
enum TqStatus tq_loop_monitor(struct TqLoop *lp,
                              enum TqEventKind kind,
                              const char *patient,
                              uint64_t timestamp,
                              int32_t *applied);

// Runs one analyze, plan, execute and maintain cycle at time `now` and
// reports the number of violations it detected.
//
// # Safety
// `lp` must be a live handle; `new_violations` may be null.
enum TqStatus tq_loop_invoke(struct TqLoop *lp, uint64_t now, size_t *new_violations);

// Number of elements currently held by the loop's model.
//
// # Safety
// `lp` must be a live handle and `out` a valid pointer.
enum TqStatus tq_loop_element_count(const struct TqLoop *lp, size_t *out);

// All violations detected so far, as a JSON array.
//
// # Safety
// `lp` must be a live handle and `out` a valid pointer.
enum TqStatus tq_loop_violations(const struct TqLoop *lp, char **out);

// # Safety
// `lp` must come from [`tq_loop_new`] and not be used afterwards.
void tq_loop_free(struct TqLoop *lp);

// Replays a CSV event log through the loop with the bundled queries and
// writes the run report as JSON to `out`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum TqStatus tq_replay_log(const char *path, enum TqVariant variant_, uint64_t period, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEMPOQ_H */
