/* C interface to the objectiveqm library. */

#pragma once

/* Generated with cbindgen:0.29.4 */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Call outcome. `OQM_STATUS_INFEASIBLE` and `OQM_STATUS_NO_THRESHOLD` are
 scientific results, not failures.
 */
typedef enum OqmStatus {
  OQM_STATUS_OK = 0,
  OQM_STATUS_INFEASIBLE = 1,
  OQM_STATUS_INVALID_INPUT = 2,
  OQM_STATUS_INTERNAL = 3,
  OQM_STATUS_NULL_POINTER = 4,
  OQM_STATUS_NOT_FOUND = 5,
  OQM_STATUS_NO_THRESHOLD = 6,
} OqmStatus;

/*
 Opaque micro-model handle.
 */
typedef struct OqmModel OqmModel;

/*
 Library version as a static NUL-terminated string; do not free.
 */
const char *oqm_version(void);

/*
 Most recent error message on this thread; valid until the next failing
 call from the same thread. Do not free.
 */
const char *oqm_last_error_message(void);

/*
 Frees a string returned by this library. NULL is accepted.

 # Safety
 `s` must be a pointer previously returned by an `oqm_*` function that
 documents `oqm_string_free` as its deallocator, and not yet freed.
 */
void oqm_string_free(char *s);

/*
 Frees a model handle. NULL is accepted.

 # Safety
 `model` must come from `oqm_model_from_json` or `oqm_synthesize_chsh`
 and must not be used afterwards.
 */
void oqm_model_free(struct OqmModel *model);

/*
 Parses a model-file JSON document into a validated model handle.

 # Safety
 `json` must be a NUL-terminated string; `out_model` must be a valid
 writable pointer.
 */
enum OqmStatus oqm_model_from_json(const char *json, struct OqmModel **out_model);

/*
 Serializes a model handle back to model-file JSON. Returns NULL on error;
 free with `oqm_string_free`.

 # Safety
 `model` must be a live handle from this library.
 */
char *oqm_model_to_json(const struct OqmModel *model);

/*
 Number of micro-classes; 0 for a NULL handle.

 # Safety
 `model`, when non-NULL, must be a live handle from this library.
 */
size_t oqm_model_class_count(const struct OqmModel *model);

/*
 Analytic probability breakdown of the property (observable, delta) on the
 model: overall probability, detection probability, and the probability
 conditional on detection. `*out_has_conditional` is false when nothing is
 ever detected (the conditional is undefined and `*out_conditional` is set
 to NaN).

 # Safety
 `model` must be a live handle; `observable` a NUL-terminated string;
 `delta` must point to `delta_len` doubles; the out pointers must be valid.
 */
enum OqmStatus oqm_state_breakdown(const struct OqmModel *model,
                                   const char *observable,
                                   const double *delta,
                                   size_t delta_len,
                                   bool include_a0,
                                   double *out_total,
                                   double *out_detect,
                                   double *out_conditional,
                                   bool *out_has_conditional);

/*
 Detected-pairs-only correlation of two dichotomic elementary observables.
 `*out_defined` is false when the coincidence rate vanishes.

 # Safety
 `model` must be a live handle; label pointers NUL-terminated; out
 pointers valid.
 */
enum OqmStatus oqm_conditional_correlation(const struct OqmModel *model,
                                           const char *a,
                                           const char *b,
                                           double *out_value,
                                           bool *out_defined);

/*
 All-objects correlation with the no-registration outcome counted as 0.

 # Safety
 As for `oqm_conditional_correlation`.
 */
enum OqmStatus oqm_unconditional_correlation(const struct OqmModel *model,
                                             const char *a,
                                             const char *b,
                                             double *out_value);

/*
 Synthesizes a model whose detected-block statistics meet the CHSH targets
 (correlations e_xy, per-setting conditional marginals, per-side efficiency
 eta). Returns `OQM_STATUS_INFEASIBLE` without a model when no local
 objective model exists. Setting labels are A1, A2, B1, B2.

 # Safety
 `out_model` must be a valid writable pointer.
 */
enum OqmStatus oqm_synthesize_chsh(double e11,
                                   double e12,
                                   double e21,
                                   double e22,
                                   double a_marginal_1,
                                   double a_marginal_2,
                                   double b_marginal_1,
                                   double b_marginal_2,
                                   double eta,
                                   struct OqmModel **out_model);

/*
 Largest per-side efficiency at which the CHSH targets stay classically
 reproducible, bisected to `tol`. Marginal targets are taken as unbiased.

 # Safety
 `out_eta` must be a valid writable pointer.
 */
enum OqmStatus oqm_eta_threshold(double e11,
                                 double e12,
                                 double e21,
                                 double e22,
                                 double tol,
                                 double *out_eta);

/*
 Runs the block-wise CHSH estimation (standard labels A1, A2, B1, B2) and
 returns the report as JSON. NULL on error; free with `oqm_string_free`.

 # Safety
 `model` must be a live handle from this library.
 */
char *oqm_chsh_blockwise_json(const struct OqmModel *model, uint64_t n_per_block, uint64_t seed);

/*
 Runs the full Peres-Mermin pipeline (exhaustive search, evasion model,
 per-context simulation of `n_per_context` joint measurements) and returns
 a JSON report. NULL on error; free with `oqm_string_free`.
 */
char *oqm_ks_demo_json(uint64_t n_per_context, uint64_t seed);
