#include <math.h>
#include <stdio.h>
#include <string.h>

#include "lqueue/lqueue.h"

static int failures = 0;

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: CHECK(%s) failed\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

static int near(double a, double b, double tol) { return fabs(a - b) <= tol; }

static void models(void) {
  lq_model* m = NULL;
  CHECK(lq_model_from_string("drift = -1\ngauss_var = 1\n", &m) == LQ_OK);
  double drift = 0;
  CHECK(lq_model_mean_drift(m, &drift) == LQ_OK && drift == -1.0);
  int valid = 0;
  char* report = NULL;
  CHECK(lq_model_validate(m, &valid, &report) == LQ_OK && valid == 1);
  lq_string_free(report);

  double re = 0, im = 0;
  CHECK(lq_levy_exponent(m, 1.0, 0.0, &re, &im) == LQ_OK);
  CHECK(near(re, -0.5, 1e-15) && near(im, -1.0, 1e-15));
  CHECK(lq_laplace_exponent(m, 2.0, 0.0, &re, &im) == LQ_OK && near(re, 0.0, 1e-15));

  char* text = NULL;
  CHECK(lq_model_format(m, &text) == LQ_OK);
  lq_model* again = NULL;
  CHECK(lq_model_from_string(text, &again) == LQ_OK);
  uint64_t h1 = 0, h2 = 1;
  lq_model_fingerprint(m, &h1);
  lq_model_fingerprint(again, &h2);
  CHECK(h1 == h2);
  lq_string_free(text);
  lq_model_free(again);
  lq_model_free(m);

  CHECK(lq_model_from_string("drift = -1\nsigma = 2\n", &m) == LQ_PARSE_ERROR);
  CHECK(strstr(lq_last_error(), "line 2") != NULL);
  CHECK(lq_model_from_file("/no/such/file", &m) == LQ_IO_ERROR);

  const double w[] = {1.0}, d[] = {1.0};
  CHECK(lq_model_create(1.0, 1.0, 0.0, 0, NULL, NULL, 0.0, 0, NULL, NULL, &m) == LQ_OK);
  CHECK(lq_model_validate(m, &valid, &report) == LQ_OK && valid == 0);
  CHECK(report && strstr(report, "nonnegative mean drift") != NULL);
  lq_string_free(report);
  lq_ladder* bad = NULL;
  CHECK(lq_ladder_create(m, 1.0, &bad) == LQ_INVALID_MODEL);
  CHECK(bad == NULL);
  lq_model_free(m);

  CHECK(lq_model_create(-1.0, 0.0, 0.5, 1, w, d, 0.0, 0, NULL, NULL, &m) == LQ_OK);
  CHECK(lq_model_mean_drift(m, &drift) == LQ_OK && near(drift, -0.5, 1e-15));
  lq_model_free(m);
}

static void ladder(void) {
  lq_model* m = NULL;
  lq_ladder* lx = NULL;
  lq_model_from_string("drift = -1\ngauss_var = 1\n", &m);
  CHECK(lq_ladder_create(m, 1.0, &lx) == LQ_OK);
  lq_model_free(m);

  lq_wh_info info;
  CHECK(lq_wh_info_at(lx, 1.0, &info) == LQ_OK);
  CHECK(info.ascending_roots == 1 && info.descending_roots == 1);
  CHECK(near(info.leading, 0.5, 1e-15));
  CHECK(info.identity_residual < 1e-12);

  double re[4], im[4];
  size_t count = 0;
  CHECK(lq_wh_roots(lx, 1.0, LQ_ASCENDING, 4, re, im, &count) == LQ_OK && count == 1);
  CHECK(near(re[0], 1.0 + sqrt(3.0), 1e-13) && im[0] == 0.0);
  CHECK(lq_wh_roots(lx, 1.0, LQ_DESCENDING, 0, NULL, NULL, &count) == LQ_OK && count == 1);

  double kr = 0, ki = 0;
  CHECK(lq_kappa(lx, LQ_ASCENDING, 1.0, 0.0, 0.0, &kr, &ki) == LQ_OK);
  CHECK(near(kr, sqrt(0.5) * (1.0 + sqrt(3.0)), 1e-13));
  double slope = 0;
  CHECK(lq_kappa_dq(lx, LQ_ASCENDING, 0.0, 0.0, &slope) == LQ_OK && near(slope, sqrt(0.5), 1e-8));
  CHECK(lq_wh_info_at(lx, -1.0, &info) == LQ_INVALID_ARGUMENT);

  char* dump = NULL;
  CHECK(lq_wh_dump(lx, 1.0, &dump) == LQ_OK && strstr(dump, "ascending.roots") != NULL);
  lq_string_free(dump);

  lq_formula f = -1;
  CHECK(lq_formula_from_name("min_workload", &f) == LQ_OK);
  CHECK(strcmp(lq_formula_name(f), "min_workload") == 0);
  CHECK(strcmp(lq_formula_arguments(f), "q,theta") == 0);
  CHECK(lq_formula_invertible(f) == 1);
  CHECK(lq_formula_from_name("nope", &f) == LQ_UNKNOWN_FORMULA);
  CHECK(lq_formula_name(-1) == NULL);
  lq_formula_from_name("min_workload", &f);

  lq_args a;
  memset(&a, 0, sizeof a);
  a.q = 1.0;
  a.theta = 1.0;
  double v = 0;
  CHECK(lq_transform(lx, f, &a, &v) == LQ_OK && near(v, 0.9106836025229592, 1e-13));
  CHECK(strcmp(lq_last_error(), "") == 0);

  lq_sim_config c;
  lq_sim_config_default(&c);
  c.samples = 20000;
  c.seed = 3;
  lq_estimate e;
  CHECK(lq_estimate_formula(lx, f, &a, &c, &e) == LQ_OK && e.samples == 20000);
  double z = 0;
  int pass = 0;
  CHECK(lq_compare(v, &e, 4.0, &z, &pass) == LQ_OK && pass == 1);

  lq_args batch[2] = {a, a};
  batch[1].theta = 2.0;
  lq_estimate out[2];
  CHECK(lq_estimate_batch(lx, f, 2, batch, &c, out) == LQ_OK);
  CHECK(out[0].mean == e.mean);
  batch[1].q = 2.0;
  CHECK(lq_estimate_batch(lx, f, 2, batch, &c, out) == LQ_INVALID_ARGUMENT);

  c.samples = 5;
  char* csv = NULL;
  CHECK(lq_simulate_csv(lx, &c, &csv) == LQ_OK && strncmp(csv, "path,", 5) == 0);
  lq_string_free(csv);

  lq_formula stationary;
  lq_formula_from_name("stationary", &stationary);
  const double xs[3] = {0.0, 0.5, 1.0};
  double cdf[3], atom = -1;
  CHECK(lq_invert(lx, stationary, &a, 3, xs, NULL, cdf, &atom) == LQ_OK);
  CHECK(near(atom, 0.0, 1e-12) && near(cdf[2], 1.0 - exp(-2.0), 1e-8));
  lq_formula busy;
  lq_formula_from_name("busy_period", &busy);
  CHECK(lq_invert(lx, busy, &a, 3, xs, NULL, cdf, &atom) == LQ_INVALID_ARGUMENT);
  CHECK(strlen(lq_last_error()) > 0);

  lq_ladder_free(lx);
}

int main(void) {
  CHECK(strcmp(lq_version(), "0.1.0") == 0);
  CHECK(strcmp(lq_status_name(LQ_OSCILLATION), "oscillation detected") == 0);
  models();
  ladder();
  if (failures) fprintf(stderr, "%d failures\n", failures);
  else printf("all C API checks passed\n");
  return failures ? 1 : 0;
}
