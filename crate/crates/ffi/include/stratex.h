#ifndef STRATEX_H
#define STRATEX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StxAudience {
  STX_AUDIENCE_EXPERT = 0,
  STX_AUDIENCE_LAYPERSON = 1,
} StxAudience;

typedef enum StxKind {
  STX_KIND_ACCEPTANCE = 0,
  STX_KIND_BIDDING = 1,
} StxKind;

typedef enum StxStatus {
  STX_STATUS_OK = 0,
  STX_STATUS_NULL_ARGUMENT = 1,
  STX_STATUS_INVALID_UTF8 = 2,
  STX_STATUS_PARSE = 3,
  STX_STATUS_EXPLAIN = 4,
  STX_STATUS_SCENARIO = 5,
  STX_STATUS_ENGINE = 6,
  STX_STATUS_INVALID_ARGUMENT = 7,
  STX_STATUS_PANIC = 99,
} StxStatus;

/**
 * A parsed strategy template.
 */
typedef struct StxTemplate StxTemplate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next library call on this thread.
 */
const char *stx_last_error(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void stx_string_free(char *s);

/**
 * Parse template source text into `*out`.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` writable.
 */
enum StxStatus stx_template_parse(const char *source, struct StxTemplate **out);

/**
 * Release a template. Null is ignored.
 *
 * # Safety
 * `t` must come from [`stx_template_parse`] and not have been freed.
 */
void stx_template_free(struct StxTemplate *t);

/**
 * # Safety
 * `t` must be a live template and `out` writable.
 */
enum StxStatus stx_template_kind(const struct StxTemplate *t, enum StxKind *out);

/**
 * # Safety
 * `t` must be a live template and `out` writable.
 */
enum StxStatus stx_template_phase_count(const struct StxTemplate *t, uintptr_t *out);

/**
 * Zero-based index of the phase containing normalized time `time`.
 *
 * # Safety
 * `t` must be a live template and `out` writable.
 */
enum StxStatus stx_template_phase_at(const struct StxTemplate *t, double time, uintptr_t *out);

/**
 * The template as JSON.
 *
 * # Safety
 * `t` must be a live template and `out` writable.
 */
enum StxStatus stx_template_to_json(const struct StxTemplate *t, char **out);

/**
 * Explain a template with the offline backend. `*out` receives the
 * validated explanation as JSON.
 *
 * # Safety
 * `t` must be a live template and `out` writable.
 */
enum StxStatus stx_template_explain(const struct StxTemplate *t,
                                    enum StxAudience audience,
                                    char **out);

/**
 * Run the scenario at `path` against the builtin Boulware agent. A zero
 * `deadline` or null `seed` keeps the scenario's value. `*out` receives
 * the outcome, transcript included, as JSON.
 *
 * # Safety
 * `path` must be a NUL-terminated string, `seed` null or readable and
 * `out` writable.
 */
enum StxStatus stx_simulate(const char *path, uint32_t deadline, const uint64_t *seed, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STRATEX_H */
