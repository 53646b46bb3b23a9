#ifndef COMPOSE_PATTERNS_H
#define COMPOSE_PATTERNS_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call.
 */
typedef enum {
  CP_OK = 0,
  CP_NULL_ARGUMENT = 1,
  CP_INVALID_UTF8 = 2,
  CP_ROOT_NOT_FOUND = 3,
  CP_INVALID_OPTION = 4,
  CP_INTERNAL = 5,
} CpStatus;

/**
 * Opaque scan result. Release with `cp_report_free`.
 */
typedef struct CpReport CpReport;

/**
 * Scan configuration. Obtain defaults from `cp_scan_options_default`
 * and change only the fields of interest. Booleans are 0 or 1.
 */
typedef struct {
  /**
   * Minimum itemset support, in (0, 1].
   */
  double min_support;
  /**
   * Accept any .yml/.yaml with a top-level services mapping.
   */
  int loose;
  /**
   * Count unclassified services during itemset mining.
   */
  int include_unclassified;
  /**
   * Follow extends targets whose filename fails the corpus filter.
   */
  int follow_extends_outside_filter;
} CpScanOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default scan options, suitable for passing to `cp_scan_root_opts`.
 */
CpScanOptions cp_scan_options_default(void);

/**
 * Scans the directory tree at `root` with default options and writes a
 * new report handle to `out`.
 *
 * # Safety
 * `root` must be a valid NUL-terminated path; `out` must be a valid
 * pointer to a `CpReport*` slot.
 */
CpStatus cp_scan_root(const char *root, CpReport **out);

/**
 * Scans the directory tree at `root`. `opts` may be NULL for defaults.
 *
 * # Safety
 * `root` must be a valid NUL-terminated path; `opts` NULL or valid;
 * `out` must be a valid pointer to a `CpReport*` slot.
 */
CpStatus cp_scan_root_opts(const char *root, const CpScanOptions *opts, CpReport **out);

/**
 * The report as pretty-printed JSON. Caller frees with `cp_string_free`.
 * Returns NULL on a NULL handle.
 *
 * # Safety
 * `report` must be NULL or a live handle from `cp_scan_root*`.
 */
char *cp_report_json(const CpReport *report);

/**
 * The report rendered as human-readable text. Caller frees with
 * `cp_string_free`. Returns NULL on a NULL handle.
 *
 * # Safety
 * `report` must be NULL or a live handle from `cp_scan_root*`.
 */
char *cp_report_text(const CpReport *report);

/**
 * Number of file records in the report (merged views included).
 * Returns 0 on a NULL handle.
 *
 * # Safety
 * `report` must be NULL or a live handle from `cp_scan_root*`.
 */
uintptr_t cp_report_file_count(const CpReport *report);

/**
 * Number of warnings collected during the scan. Returns 0 on NULL.
 *
 * # Safety
 * `report` must be NULL or a live handle from `cp_scan_root*`.
 */
uintptr_t cp_report_warning_count(const CpReport *report);

/**
 * Releases a report handle. NULL is a no-op.
 *
 * # Safety
 * `report` must be NULL or a live handle; the handle is dead afterwards.
 */
void cp_report_free(CpReport *report);

/**
 * Classifies one image reference against the built-in rule table and
 * returns the canonical service-type name (for example "Database").
 * Caller frees with `cp_string_free`.
 *
 * # Safety
 * `image` must be a valid NUL-terminated string.
 */
char *cp_classify_image(const char *image);

/**
 * Prose description of a pattern id such as "SERVICE_INHERITANCE".
 * Returns NULL for an unknown id (see `cp_last_error_message`).
 * Caller frees with `cp_string_free`.
 *
 * # Safety
 * `id` must be a valid NUL-terminated string.
 */
char *cp_explain_pattern(const char *id);

/**
 * All pattern ids, newline separated. Caller frees with `cp_string_free`.
 */
char *cp_pattern_ids(void);

/**
 * Releases a string returned by this library. NULL is a no-op.
 *
 * # Safety
 * `s` must be NULL or a string returned by this library, freed once.
 */
void cp_string_free(char *s);

/**
 * Copy of the calling thread's last error message, or NULL when the
 * last call succeeded. Caller frees with `cp_string_free`.
 */
char *cp_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COMPOSE_PATTERNS_H */
