#ifndef FAIRAUDIT_H
#define FAIRAUDIT_H

/* Generated by cbindgen from src/lib.rs. Do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum FaStatus {
  FA_STATUS_OK = 0,
  FA_STATUS_NULL_ARGUMENT = 1,
  FA_STATUS_INVALID_UTF8 = 2,
  FA_STATUS_IO = 3,
  FA_STATUS_PARSE = 4,
  FA_STATUS_INVALID_DATA = 5,
  FA_STATUS_INVALID_CONFIG = 6,
  FA_STATUS_INVALID_SCENARIO = 7,
  FA_STATUS_INTERNAL = 8,
} FaStatus;

typedef enum FaVerdict {
  FA_VERDICT_PARITY = 0,
  FA_VERDICT_DISPARITY = 1,
  FA_VERDICT_INSUFFICIENT_DATA = 2,
  FA_VERDICT_REFERENCE = 3,
} FaVerdict;

// A loaded or generated dataset.
typedef struct FaDataset FaDataset;

// A finished audit report.
typedef struct FaReport FaReport;

// A validated screening scenario.
typedef struct FaScenario FaScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next fairaudit call on the same thread.
const char *fa_last_error_message(void);

// Engine version as a static NUL-terminated string.
const char *fa_version(void);

// # Safety
// `s` must be NULL or a string returned by this library, not yet freed.
void fa_string_free(char *s);

// Load a CSV dataset with the default columns (`entity_id`, `score`,
// `label_value`, attributes = the rest).
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum FaStatus fa_dataset_load_csv(const char *path, struct FaDataset **out);

// Parse CSV text with the default columns.
//
// # Safety
// `text` must be a NUL-terminated string; `out` must be writable.
enum FaStatus fa_dataset_from_csv(const char *text, struct FaDataset **out);

// # Safety
// `dataset` must be a live handle; `path` a NUL-terminated string.
enum FaStatus fa_dataset_write_csv(const struct FaDataset *dataset, const char *path);

// Number of records; 0 for NULL.
//
// # Safety
// `dataset` must be NULL or a live handle.
size_t fa_dataset_len(const struct FaDataset *dataset);

// # Safety
// `dataset` must be NULL or a handle not yet freed.
void fa_dataset_free(struct FaDataset *dataset);

// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum FaStatus fa_scenario_builtin(const char *name, struct FaScenario **out);

// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum FaStatus fa_scenario_load(const char *path, struct FaScenario **out);

// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum FaStatus fa_scenario_from_json(const char *json, struct FaScenario **out);

// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum FaStatus fa_scenario_to_json(const struct FaScenario *scenario, char **out);

// Expected-outcome table rendered as `json`, `markdown`, or `csv`.
//
// # Safety
// `scenario` must be a live handle; `format` a NUL-terminated string;
// `out` must be writable.
enum FaStatus fa_scenario_expected(const struct FaScenario *scenario,
                                   const char *format,
                                   char **out);

// # Safety
// `scenario` must be a live handle; `out` must be writable.
enum FaStatus fa_scenario_generate_cohort(const struct FaScenario *scenario,
                                          uint64_t seed,
                                          struct FaDataset **out);

// # Safety
// `scenario` must be NULL or a handle not yet freed.
void fa_scenario_free(struct FaScenario *scenario);

// Audit a dataset. `config_json` may be NULL for the defaults; otherwise a
// JSON object with any of `tau`, `metrics`, `reference`, `threshold`,
// `min_group_size`, `attributes`.
//
// # Safety
// `dataset` must be a live handle; `config_json` NULL or a NUL-terminated
// string; `out` must be writable.
enum FaStatus fa_audit(const struct FaDataset *dataset,
                       const char *config_json,
                       struct FaReport **out);

// Audit a scenario's exact expected outcomes.
//
// # Safety
// As for [`fa_audit`].
enum FaStatus fa_audit_expected(const struct FaScenario *scenario,
                                const char *config_json,
                                struct FaReport **out);

// Overall verdict: [`FaVerdict::Parity`] or [`FaVerdict::Disparity`].
//
// # Safety
// `report` must be a live handle; `out` must be writable.
enum FaStatus fa_report_verdict(const struct FaReport *report, enum FaVerdict *out);

// Render a report as `json`, `markdown`, or `csv`.
//
// # Safety
// `report` must be a live handle; `format` a NUL-terminated string; `out`
// must be writable.
enum FaStatus fa_report_emit(const struct FaReport *report, const char *format, char **out);

// # Safety
// `report` must be NULL or a handle not yet freed.
void fa_report_free(struct FaReport *report);

// Classify a disparity measure against `tau`. Both are decimal or
// fraction strings; a NULL or `"undefined"` measure yields
// [`FaVerdict::InsufficientData`].
//
// # Safety
// `measure` NULL or a NUL-terminated string; `tau` a NUL-terminated string;
// `out` must be writable.
enum FaStatus fa_parity_check(const char *measure, const char *tau, enum FaVerdict *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRAUDIT_H */
