/* C interface for the tangent-bundle two-form verification engine. */

#ifndef TMLIFT_H
#define TMLIFT_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * No error.
 */
#define TML_OK 0

/**
 * A required argument was null or not valid UTF-8.
 */
#define TML_INVALID_ARGUMENT 1

/**
 * The scenario JSON was rejected (syntax, schema, or expression error), or
 * the fixture name is unknown.
 */
#define TML_BAD_SCENARIO 2

/**
 * Evaluation failed while running checks (domain error, singular matrix).
 */
#define TML_EVAL_ERROR 3

/**
 * Opaque handle to the result of running a scenario.
 */
typedef struct TmlReport TmlReport;

/**
 * Opaque handle to a validated scenario.
 */
typedef struct TmlScenario TmlScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the error message of the most recent failing call on this thread,
 * or an empty string after a success. The pointer stays valid until the
 * next call into this library on the same thread.
 */
const char *tml_last_error(void);

/**
 * Parses and validates a scenario from JSON text, storing a new handle in
 * `out`. On failure `out` is untouched and the status describes the error.
 *
 * # Safety
 *
 * `json` must be a valid NUL-terminated string or null; `out` must be a
 * valid pointer to writable memory or null.
 */
int32_t tml_scenario_from_json(const char *json, struct TmlScenario **out);

/**
 * Builds a scenario from a named built-in fixture (see
 * [`tml_fixture_names_json`]), storing a new handle in `out`.
 *
 * # Safety
 *
 * `name` must be a valid NUL-terminated string or null; `out` must be a
 * valid pointer to writable memory or null.
 */
int32_t tml_scenario_from_fixture(const char *name, struct TmlScenario **out);

/**
 * Releases a scenario handle. Null is ignored.
 *
 * # Safety
 *
 * `scenario` must be null or a pointer previously returned through
 * [`tml_scenario_from_json`] or [`tml_scenario_from_fixture`] that has not
 * been freed already.
 */
void tml_scenario_free(struct TmlScenario *scenario);

/**
 * Runs every check of a scenario, storing a new report handle in `out`.
 * `label` names the run in the report (pass the scenario's path or any
 * identifier).
 *
 * # Safety
 *
 * `scenario` must be a live handle or null; `label` must be a valid
 * NUL-terminated string or null; `out` must be a valid pointer to writable
 * memory or null.
 */
int32_t tml_run(const struct TmlScenario *scenario, const char *label, struct TmlReport **out);

/**
 * Returns 1 when every check of the report passed, 0 when any failed, and
 * -1 when `report` is null.
 *
 * # Safety
 *
 * `report` must be null or a live report handle.
 */
int32_t tml_report_passed(const struct TmlReport *report);

/**
 * Serializes a report as pretty-printed JSON. The returned string must be
 * released with [`tml_string_free`]; returns null when `report` is null.
 *
 * # Safety
 *
 * `report` must be null or a live report handle.
 */
char *tml_report_json(const struct TmlReport *report);

/**
 * Renders a report as human-readable text. The returned string must be
 * released with [`tml_string_free`]; returns null when `report` is null.
 *
 * # Safety
 *
 * `report` must be null or a live report handle.
 */
char *tml_report_text(const struct TmlReport *report);

/**
 * Releases a report handle. Null is ignored.
 *
 * # Safety
 *
 * `report` must be null or a report handle that has not been freed already.
 */
void tml_report_free(struct TmlReport *report);

/**
 * Returns the built-in fixture names as a JSON array of strings. The
 * returned string must be released with [`tml_string_free`].
 */
char *tml_fixture_names_json(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 *
 * `s` must be null or a string returned by this library that has not been
 * freed already.
 */
void tml_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TMLIFT_H */
