#ifndef EMSLICE_H
#define EMSLICE_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum EmsStatus {
  EMS_STATUS_OK = 0,
  EMS_STATUS_NULL_ARGUMENT = 1,
  EMS_STATUS_INVALID_UTF8 = 2,
  EMS_STATUS_PARSE_ERROR = 3,
  EMS_STATUS_UNKNOWN_METHOD = 4,
  EMS_STATUS_OUT_OF_RANGE = 5,
  /**
   * A rule rejects the candidate and `force` was not set.
   */
  EMS_STATUS_REJECTED = 6,
  /**
   * The candidate could not be extracted.
   */
  EMS_STATUS_EXTRACT_FAILED = 7,
  EMS_STATUS_INVALID_ARGUMENT = 8,
  EMS_STATUS_PANIC = 99,
} EmsStatus;

typedef enum EmsCohesionMode {
  EMS_COHESION_MODE_OUTPUT = 0,
  EMS_COHESION_MODE_ALL = 1,
} EmsCohesionMode;

/**
 * A parsed and type-checked program.
 */
typedef struct EmsProgram EmsProgram;

/**
 * Candidate filtering options; see [`ems_suggest_options_default`].
 */
typedef struct EmsSuggestOptions {
  double max_overlap;
  size_t min_extract_size;
  double allow_duplication;
} EmsSuggestOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string.
 */
const char *ems_version(void);

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call on the same thread.
 */
const char *ems_last_error(void);

struct EmsSuggestOptions ems_suggest_options_default(void);

/**
 * Parses and checks MIMPL `source`. On success `*out` owns a handle to be
 * released with [`ems_program_free`].
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EmsStatus ems_program_parse(const char *source, struct EmsProgram **out);

/**
 * Releases a program. Null is ignored.
 *
 * # Safety
 * `program` must come from [`ems_program_parse`] and not be used again.
 */
void ems_program_free(struct EmsProgram *program);

/**
 * Number of methods in the program.
 *
 * # Safety
 * `program` must be a live handle and `out` a valid pointer.
 */
enum EmsStatus ems_program_method_count(const struct EmsProgram *program, size_t *out);

/**
 * Name of method `index` in declaration order.
 *
 * # Safety
 * `program` must be a live handle and `out` a valid pointer.
 */
enum EmsStatus ems_program_method_name(const struct EmsProgram *program, size_t index, char **out);

/**
 * Candidates with rule verdicts as a JSON array of
 * `{"method", "candidates": [...]}`. `method` may be null for all methods;
 * `options` may be null for the defaults.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum EmsStatus ems_suggest_json(const struct EmsProgram *program,
                                const char *method,
                                const struct EmsSuggestOptions *options,
                                char **out);

/**
 * Applies candidate `index` of `method` (as numbered by
 * [`ems_suggest_json`] with the same options) and returns the rewritten
 * program source. Rejected candidates need `force`.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum EmsStatus ems_apply(const struct EmsProgram *program,
                         const char *method,
                         const struct EmsSuggestOptions *options,
                         size_t index,
                         bool force,
                         char **out);

/**
 * Cohesion and complexity per method as JSON. `method` may be null.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum EmsStatus ems_metrics_json(const struct EmsProgram *program,
                                const char *method,
                                enum EmsCohesionMode mode,
                                char **out);

/**
 * Interprets `method` on `args_json`, a JSON array with one value per
 * parameter, and returns the trace as a JSON array of events.
 *
 * # Safety
 * Pointers must be valid; strings NUL-terminated.
 */
enum EmsStatus ems_run_json(const struct EmsProgram *program,
                            const char *method,
                            const char *args_json,
                            uint64_t fuel,
                            char **out);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used again.
 */
void ems_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EMSLICE_H */
