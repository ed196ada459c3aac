#ifndef SUBJEVAL_H
#define SUBJEVAL_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SubjevalStatus {
  SUBJEVAL_STATUS_OK = 0,
  SUBJEVAL_STATUS_NULL_POINTER = 1,
  SUBJEVAL_STATUS_INVALID_INPUT = 2,
  SUBJEVAL_STATUS_SIZE_LIMIT = 3,
  SUBJEVAL_STATUS_DEGENERATE_VARIANCE = 4,
  SUBJEVAL_STATUS_INFEASIBLE = 5,
  SUBJEVAL_STATUS_SCHEMA = 6,
  SUBJEVAL_STATUS_IO = 7,
  SUBJEVAL_STATUS_OUT_OF_RANGE = 8,
  SUBJEVAL_STATUS_PANIC = 9,
} SubjevalStatus;

typedef enum SubjevalMwuMode {
  SUBJEVAL_MWU_MODE_AUTO = 0,
  SUBJEVAL_MWU_MODE_EXACT = 1,
  SUBJEVAL_MWU_MODE_NORMAL_APPROX = 2,
} SubjevalMwuMode;

typedef enum SubjevalCorrection {
  SUBJEVAL_CORRECTION_HOLM_BONFERRONI = 0,
  SUBJEVAL_CORRECTION_BH_FDR = 1,
  SUBJEVAL_CORRECTION_NONE = 2,
} SubjevalCorrection;

typedef enum SubjevalStudyKind {
  SUBJEVAL_STUDY_KIND_HUMANLIKENESS = 0,
  SUBJEVAL_STUDY_KIND_SPEECH_APPROP = 1,
  SUBJEVAL_STUDY_KIND_INTERLOC_APPROP = 2,
} SubjevalStudyKind;

/**
 * Result of an analysis run.
 */
typedef struct SubjevalAnalysis SubjevalAnalysis;

/**
 * Per-condition response counts of a preference study.
 */
typedef struct SubjevalCounts SubjevalCounts;

/**
 * A study plan.
 */
typedef struct SubjevalPlan SubjevalPlan;

typedef struct SubjevalTestResult {
  double statistic;
  /**
   * NaN when the test has no degrees of freedom.
   */
  double df;
  double p_value;
} SubjevalTestResult;

typedef struct SubjevalInterval {
  double lower;
  double upper;
  double level;
} SubjevalInterval;

typedef struct SubjevalMas {
  double mas;
  double lower;
  double upper;
  double pref_matched;
  uint64_t n;
} SubjevalMas;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next call into the library on the same thread.
 */
const char *subjeval_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *subjeval_version(void);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library.
 */
void subjeval_string_free(char *s);

/**
 * Welch's unequal-variance t-test.
 *
 * # Safety
 * `x` and `y` must point to `nx` and `ny` readable doubles; `out` must be
 * writable.
 */
enum SubjevalStatus subjeval_welch_t(const double *x,
                                     size_t nx,
                                     const double *y,
                                     size_t ny,
                                     struct SubjevalTestResult *out);

/**
 * Two-sided Mann-Whitney U test; the statistic is U of `x`.
 *
 * # Safety
 * As for [`subjeval_welch_t`].
 */
enum SubjevalStatus subjeval_mann_whitney_u(const double *x,
                                            size_t nx,
                                            const double *y,
                                            size_t ny,
                                            enum SubjevalMwuMode mode,
                                            struct SubjevalTestResult *out);

/**
 * Sample median with its order-statistic confidence interval.
 *
 * # Safety
 * `x` must point to `n` readable doubles; `median` and `interval` must be
 * writable.
 */
enum SubjevalStatus subjeval_median_ci(const double *x,
                                       size_t n,
                                       double level,
                                       double *median,
                                       struct SubjevalInterval *interval);

/**
 * Sample mean with a Student-t interval, widened outward to a multiple of
 * `round_to` when `round_to > 0`.
 *
 * # Safety
 * As for [`subjeval_median_ci`].
 */
enum SubjevalStatus subjeval_mean_ci(const double *x,
                                     size_t n,
                                     double level,
                                     double round_to,
                                     double *mean,
                                     struct SubjevalInterval *interval);

/**
 * Multiple-comparison decisions for `n` p-values; `rejected[i]` is set to
 * 1 for rejected hypotheses and 0 otherwise.
 *
 * # Safety
 * `p_values` must point to `n` readable doubles and `rejected` to `n`
 * writable bytes.
 */
enum SubjevalStatus subjeval_correct(const double *p_values,
                                     size_t n,
                                     double alpha,
                                     enum SubjevalCorrection method,
                                     uint8_t *rejected);

/**
 * Creates an empty count table.
 */
struct SubjevalCounts *subjeval_counts_new(void);

/**
 * Appends one condition. `counts` holds the numbers of +2, +1, 0, -1 and -2
 * responses in that order.
 *
 * # Safety
 * `table` must come from this library; `condition_id` must be a
 * NUL-terminated string and `counts` must point to 5 readable values.
 */
enum SubjevalStatus subjeval_counts_push(struct SubjevalCounts *table,
                                         const char *condition_id,
                                         const uint64_t *counts);

/**
 * Parses a count table in CSV form
 * (`condition,plus2,plus1,zero,minus1,minus2[,sum]`).
 *
 * # Safety
 * `csv_text` must be a NUL-terminated string; `table` must be writable.
 */
enum SubjevalStatus subjeval_counts_from_csv(const char *csv_text, struct SubjevalCounts **table);

/**
 * # Safety
 * `table` must be NULL or a table from this library not yet freed.
 */
size_t subjeval_counts_len(const struct SubjevalCounts *table);

/**
 * # Safety
 * `table` must be NULL or a table from this library not yet freed.
 */
void subjeval_counts_free(struct SubjevalCounts *table);

/**
 * Per-condition scores, chance tests and Welch pairwise comparisons of a
 * preference study.
 *
 * # Safety
 * `table` must be a live count table; `analysis` must be writable.
 */
enum SubjevalStatus subjeval_analyze_counts(const struct SubjevalCounts *table,
                                            double alpha,
                                            enum SubjevalCorrection method,
                                            struct SubjevalAnalysis **analysis);

/**
 * Ingests newline-JSON responses against `plan` and analyses the result with
 * the study's default configuration.
 *
 * # Safety
 * `plan` must be a live plan; `responses_ndjson` a NUL-terminated string;
 * `analysis` writable.
 */
enum SubjevalStatus subjeval_ingest_and_analyze(const struct SubjevalPlan *plan,
                                                const char *responses_ndjson,
                                                struct SubjevalAnalysis **analysis);

/**
 * # Safety
 * `analysis` must be NULL or a live analysis.
 */
size_t subjeval_analysis_condition_count(const struct SubjevalAnalysis *analysis);

/**
 * Mean appropriateness score of the condition at `index` (input order).
 *
 * # Safety
 * `analysis` must be a live analysis and `mas` writable.
 */
enum SubjevalStatus subjeval_analysis_mas(const struct SubjevalAnalysis *analysis,
                                          size_t index,
                                          struct SubjevalMas *mas);

/**
 * Number of significant condition pairs, or 0 without a pairwise matrix.
 *
 * # Safety
 * `analysis` must be NULL or a live analysis.
 */
size_t subjeval_analysis_significant_pairs(const struct SubjevalAnalysis *analysis);

/**
 * Serialises the analysis; free the result with [`subjeval_string_free`].
 *
 * # Safety
 * `analysis` must be a live analysis and `json` writable.
 */
enum SubjevalStatus subjeval_analysis_to_json(const struct SubjevalAnalysis *analysis, char **json);

/**
 * # Safety
 * `analysis` must be NULL or a live analysis.
 */
void subjeval_analysis_free(struct SubjevalAnalysis *analysis);

/**
 * Parses a plan document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `plan` writable.
 */
enum SubjevalStatus subjeval_plan_from_json(const char *json, struct SubjevalPlan **plan);

/**
 * Designs a study from comma-separated condition ids and a JSON array of
 * segments.
 *
 * # Safety
 * `conditions` and `segments_json` must be NUL-terminated strings and `plan`
 * writable.
 */
enum SubjevalStatus subjeval_design_study(enum SubjevalStudyKind kind,
                                          const char *conditions,
                                          const char *segments_json,
                                          size_t n_participants,
                                          uint64_t seed,
                                          struct SubjevalPlan **plan);

/**
 * # Safety
 * `plan` must be NULL or a live plan.
 */
size_t subjeval_plan_participant_count(const struct SubjevalPlan *plan);

/**
 * Serialises the plan; free the result with [`subjeval_string_free`].
 *
 * # Safety
 * `plan` must be a live plan and `json` writable.
 */
enum SubjevalStatus subjeval_plan_to_json(const struct SubjevalPlan *plan, char **json);

/**
 * # Safety
 * `plan` must be NULL or a live plan.
 */
void subjeval_plan_free(struct SubjevalPlan *plan);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBJEVAL_H */
