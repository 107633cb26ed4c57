#ifndef TAMP_H
#define TAMP_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Outcome of a run, as reported by [`tamp_run`].
 */
typedef enum TampOutcome {
  TAMP_OUTCOME_SUCCESS = 0,
  TAMP_OUTCOME_UNSOLVABLE_TASK = 1,
  TAMP_OUTCOME_ATTEMPTS_EXHAUSTED = 2,
} TampOutcome;

typedef enum TampStatus {
  TAMP_STATUS_OK = 0,
  /**
   * Unreadable or malformed scenario, domain, problem or world.
   */
  TAMP_STATUS_INPUT_ERROR = 1,
  /**
   * Planning or execution ended in a failure outcome.
   */
  TAMP_STATUS_PLAN_FAILURE = 2,
  TAMP_STATUS_NULL_ARGUMENT = 3,
  /**
   * A string argument is not UTF-8.
   */
  TAMP_STATUS_UTF8 = 4,
  TAMP_STATUS_PANIC = 5,
} TampStatus;

/**
 * A planned incumbent with its serialized form.
 */
typedef struct TampPlan TampPlan;

/**
 * A loaded scenario.
 */
typedef struct TampScenario TampScenario;

typedef struct TampRunSummary {
  enum TampOutcome outcome;
  /**
   * Planned effort before execution, seconds.
   */
  double c_star;
  /**
   * Effort actually spent, seconds.
   */
  double effort_s;
  uint32_t replans;
} TampRunSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *tamp_last_error(void);

/**
 * Library version, static storage.
 */
const char *tamp_version(void);

/**
 * Loads a scenario file.
 *
 * # Safety
 * `path` must be a nul-terminated string; `out` must be writable.
 */
enum TampStatus tamp_scenario_load(const char *path, struct TampScenario **out);

/**
 * Overrides the planner seed.
 *
 * # Safety
 * `sc` must come from [`tamp_scenario_load`] and not be freed.
 */
enum TampStatus tamp_scenario_set_seed(struct TampScenario *sc, uint64_t seed);

/**
 * # Safety
 * `sc` must be null or come from [`tamp_scenario_load`], freed at most once.
 */
void tamp_scenario_free(struct TampScenario *sc);

/**
 * Plans from the scenario's initial state.
 *
 * # Safety
 * `sc` must be a live scenario handle; `out` must be writable.
 */
enum TampStatus tamp_plan(const struct TampScenario *sc, struct TampPlan **out);

/**
 * Incumbent effort c*, seconds; NaN for a null handle.
 *
 * # Safety
 * `p` must be null or a live plan handle.
 */
double tamp_plan_cost(const struct TampPlan *p);

/**
 * Number of actions in the incumbent; 0 for a null handle.
 *
 * # Safety
 * `p` must be null or a live plan handle.
 */
size_t tamp_plan_len(const struct TampPlan *p);

/**
 * Incumbent as JSON lines, one step per line. Owned by the plan.
 *
 * # Safety
 * `p` must be null or a live plan handle.
 */
const char *tamp_plan_incumbent_jsonl(const struct TampPlan *p);

/**
 * # Safety
 * `p` must be null or come from [`tamp_plan`], freed at most once.
 */
void tamp_plan_free(struct TampPlan *p);

/**
 * Plans and executes against the scenario timeline. A failure outcome
 * still fills `summary` (and `trace_jsonl`) and returns
 * `TAMP_STATUS_PLAN_FAILURE`. `trace_jsonl` may be null; otherwise it
 * receives a string to release with [`tamp_string_free`].
 *
 * # Safety
 * `sc` must be a live scenario handle; `summary` must be writable;
 * `trace_jsonl` must be null or writable.
 */
enum TampStatus tamp_run(const struct TampScenario *sc,
                         struct TampRunSummary *summary,
                         char **trace_jsonl);

/**
 * Releases a string returned through an out-parameter.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void tamp_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TAMP_H */
