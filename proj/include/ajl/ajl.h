/* C interface to the estimation library: opaque handles, JSON-string
 * configuration, integer error codes. All returned strings are heap
 * allocated and must be released with ajl_string_free. Thread safety:
 * distinct handles may be used from distinct threads; the error message
 * slot is thread-local. */
#ifndef AJL_H
#define AJL_H

#ifdef __cplusplus
extern "C" {
#endif

#define AJL_OK 0
#define AJL_ERR_CONFIG 1   /* invalid configuration / usage */
#define AJL_ERR_DATA 2     /* malformed or inconsistent data */
#define AJL_ERR_NUMERIC 3  /* numerical failure or ill-posed request */
#define AJL_ERR_INTERNAL 4 /* unexpected internal failure */

typedef struct ajl_dataset ajl_dataset;
typedef struct ajl_fit ajl_fit;

/* Message for the most recent failure on this thread. */
const char* ajl_last_error_message(void);
void ajl_string_free(char* s);

/* ---- datasets ------------------------------------------------------ */

/* Long-format CSV: header subject,time,y1..yK,x1..xp. normalize_time != 0
 * affinely maps the observed time range onto [0, 1]. */
ajl_dataset* ajl_dataset_parse_csv(const char* csv_text, int normalize_time,
                                   int* error);
int ajl_dataset_write_csv(const ajl_dataset* data, char** out_csv);
int ajl_dataset_dims(const ajl_dataset* data, int* n_subjects, int* p,
                     int* K);
void ajl_dataset_free(ajl_dataset* data);

/* Scenario simulation. scenario_json: {"preset":"S1", optional overrides
 * "n","p","T","K","s","rho_x","rho_t","rho_eps","pi","kappa","errors"
 * ("gaussian"|"t3"),"n_test","seed"}. which: 0 = training set,
 * 1 = test set. out_truth_json (optional) receives the planted truth. */
ajl_dataset* ajl_simulate(const char* scenario_json, int which,
                          char** out_truth_json, int* error);

/* ---- fitting ------------------------------------------------------- */

/* fit_json keys:
 *   "M" (default 15), "degree" (3),
 *   "pipeline": "ajl" (3-stage + refinement, default) or "penalized",
 *   "cv": true to tune penalties by subject-level CV (default true for
 *         ajl), with "folds" (5), "grid_g" (12), "grid_f" (12),
 *         "seed" (1);
 *   explicit penalties when cv is false: "lambda_g","lambda_f",
 *   "pilot_lambda_g","pilot_lambda_f","lambda_f_beta";
 *   "refine": run post-selection refinement (default true). */
ajl_fit* ajl_fit_run(const ajl_dataset* data, const char* fit_json,
                     int* error);
void ajl_fit_free(ajl_fit* fit);

/* Rebuild a fit handle from a coefficients JSON produced by
 * ajl_fit_to_json, bound to the given dataset (needed for bands and
 * prediction). */
ajl_fit* ajl_fit_load(const ajl_dataset* data, const char* coefficients_json,
                      int* error);

/* Self-describing coefficients JSON (basis, A, B, active set,
 * changepoints with mapped times). */
int ajl_fit_to_json(const ajl_fit* fit, char** out_json);

/* Fitted coefficient curves on a uniform grid of G points:
 * t, alpha_1..alpha_K, then beta_{j,k} for each active j. */
int ajl_fit_curves_csv(const ajl_fit* fit, int grid_points, char** out_csv);

/* Mean squared prediction error of the fit on another dataset. */
int ajl_fit_prediction_error(const ajl_fit* fit, const ajl_dataset* data,
                             double* out_pe);

/* ---- cross-validation ---------------------------------------------- */

/* cv_json: {"M","degree","folds","grid_g","grid_f","seed","pipeline"
 * ("ajl"|"baseline")}. Output JSON: chosen penalties plus the full CV
 * surface [{"lambda_g","lambda_f","cv_error"}...]. */
int ajl_cv_run(const ajl_dataset* data, const char* cv_json,
               char** out_json);

/* ---- inference ----------------------------------------------------- */

/* band_json: {"target":"alpha"|"beta","covariate":j,"outcome":k,
 * "level":0.95,"grid":200}. CSV columns: t,center,lower,upper,flagged. */
int ajl_bands_csv(const ajl_fit* fit, const char* band_json,
                  char** out_csv);

/* ---- scenario reproduction ----------------------------------------- */

/* study_json: {"scenario":"S1".."S9","R",..,"seed","workers","methods"
 * (subset of AJL,JLL,S-AJL,S-Lasso,Oracle),"folds","grid_g","grid_f",
 * "slasso_grid","coverage_M":[..], scenario overrides as in
 * ajl_simulate}. Output JSON bundle: {"summary_csv","raw_csv",
 * "coverage_csv","manifest_json","failed_replications"}. */
int ajl_reproduce(const char* study_json, char** out_bundle_json);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* AJL_H */
