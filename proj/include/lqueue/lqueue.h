#ifndef LQUEUE_LQUEUE_H
#define LQUEUE_LQUEUE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define LQ_API __declspec(dllexport)
#else
#define LQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lq_status {
  LQ_OK = 0,
  LQ_INVALID_ARGUMENT,
  LQ_PARSE_ERROR,
  LQ_INVALID_MODEL,
  LQ_POLE_PROXIMITY,
  LQ_ROOT_CLUSTERING,
  LQ_PARTITION_ERROR,
  LQ_RESIDUAL_EXCEEDED,
  LQ_DERIVATIVE_MISMATCH,
  LQ_SMALL_Q,
  LQ_OSCILLATION,
  LQ_UNKNOWN_FORMULA,
  LQ_IO_ERROR,
  LQ_INTERNAL_ERROR
} lq_status;

typedef enum lq_side { LQ_ASCENDING = 0, LQ_DESCENDING = 1 } lq_side;
typedef enum lq_sim_mode { LQ_EXACT = 0, LQ_GRID = 1 } lq_sim_mode;

/* Formula ids follow the order of lq_formula_name(0 .. lq_formula_count()-1). */
typedef int lq_formula;

typedef struct lq_model lq_model;    /* a parsed model, possibly inadmissible */
typedef struct lq_ladder lq_ladder;  /* ladder exponents of an admissible model */

typedef struct lq_args {
  double q, theta, alpha, beta, gamma, u, v, w, lambda;
} lq_args;

typedef struct lq_sim_config {
  lq_sim_mode mode;
  double grid_step;
  double q; /* killing rate for lq_simulate_csv; estimators take q from lq_args */
  uint64_t samples;
  uint64_t seed;
  double burn_in_horizon; /* 0 derives one when the supremum sampler is needed */
  unsigned threads;       /* 0 = hardware concurrency */
} lq_sim_config;

typedef struct lq_estimate {
  double mean, se, ci_low, ci_high;
  uint64_t samples;
} lq_estimate;

typedef struct lq_wh_info {
  double q;
  double leading;
  double ascending_gauge;
  double descending_gauge;
  size_t ascending_roots;
  size_t descending_roots;
  double identity_residual;
  double product_residual;
} lq_wh_info;

typedef struct lq_inversion_options {
  double a;
  int terms;
  int euler_terms;
  double tolerance;
} lq_inversion_options;

LQ_API const char* lq_version(void);
LQ_API const char* lq_status_name(lq_status status);
/* Message of the last failed call on this thread ("" after success). */
LQ_API const char* lq_last_error(void);
LQ_API void lq_string_free(char* s);

LQ_API lq_status lq_model_from_file(const char* path, lq_model** out);
LQ_API lq_status lq_model_from_string(const char* text, lq_model** out);
LQ_API lq_status lq_model_create(double drift, double gauss_var, double up_rate, size_t up_phases,
                                 const double* up_weights, const double* up_decays, double down_rate,
                                 size_t down_phases, const double* down_weights, const double* down_decays,
                                 lq_model** out);
LQ_API void lq_model_free(lq_model* model);
/* *valid is 1 for an admissible model; *report (may be NULL) receives the
   violations, one per line, to be released with lq_string_free. */
LQ_API lq_status lq_model_validate(const lq_model* model, int* valid, char** report);
LQ_API lq_status lq_model_mean_drift(const lq_model* model, double* out);
LQ_API lq_status lq_model_fingerprint(const lq_model* model, uint64_t* out);
LQ_API lq_status lq_model_format(const lq_model* model, char** out);
LQ_API lq_status lq_levy_exponent(const lq_model* model, double re, double im, double* out_re, double* out_im);
LQ_API lq_status lq_laplace_exponent(const lq_model* model, double re, double im, double* out_re, double* out_im);

LQ_API lq_status lq_ladder_create(const lq_model* model, double gauge_scale, lq_ladder** out);
LQ_API void lq_ladder_free(lq_ladder* ladder);
LQ_API lq_status lq_wh_info_at(const lq_ladder* ladder, double q, lq_wh_info* out);
/* Copies up to `capacity` roots of one side; *count gets the total. */
LQ_API lq_status lq_wh_roots(const lq_ladder* ladder, double q, lq_side side, size_t capacity, double* re,
                             double* im, size_t* count);
LQ_API lq_status lq_wh_dump(const lq_ladder* ladder, double q, char** out);
LQ_API lq_status lq_kappa(const lq_ladder* ladder, lq_side side, double q, double theta_re, double theta_im,
                          double* out_re, double* out_im);
LQ_API lq_status lq_kappa_dq(const lq_ladder* ladder, lq_side side, double q, double theta, double* out);

LQ_API size_t lq_formula_count(void);
LQ_API const char* lq_formula_name(lq_formula formula);
LQ_API lq_status lq_formula_from_name(const char* name, lq_formula* out);
/* Comma-separated argument names the formula reads, in column order. */
LQ_API const char* lq_formula_arguments(lq_formula formula);
LQ_API int lq_formula_invertible(lq_formula formula);

LQ_API lq_status lq_transform(const lq_ladder* ladder, lq_formula formula, const lq_args* args, double* out);

LQ_API void lq_sim_config_default(lq_sim_config* config);
LQ_API lq_status lq_estimate_formula(const lq_ladder* ladder, lq_formula formula, const lq_args* args,
                                     const lq_sim_config* config, lq_estimate* out);
/* Estimates n argument tuples of one formula from a single set of paths.
   All tuples must share q and lambda. */
LQ_API lq_status lq_estimate_batch(const lq_ladder* ladder, lq_formula formula, size_t n, const lq_args* args,
                                   const lq_sim_config* config, lq_estimate* out);
/* z = (mean - analytic) / se; *pass is 1 when |z| <= threshold. */
LQ_API lq_status lq_compare(double analytic, const lq_estimate* estimate, double threshold, double* z, int* pass);
/* Per-path observables as CSV text. */
LQ_API lq_status lq_simulate_csv(const lq_ladder* ladder, const lq_sim_config* config, char** out);

LQ_API void lq_inversion_options_default(lq_inversion_options* options);
/* F at each of the n points xs; options may be NULL. */
LQ_API lq_status lq_invert(const lq_ladder* ladder, lq_formula formula, const lq_args* args, size_t n,
                           const double* xs, const lq_inversion_options* options, double* cdf, double* atom);

#ifdef __cplusplus
}
#endif

#endif
