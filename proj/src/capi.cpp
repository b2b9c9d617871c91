#include "lqueue/lqueue.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "lqueue/errors.hpp"
#include "lqueue/inversion.hpp"
#include "lqueue/levy_model.hpp"
#include "lqueue/model_io.hpp"
#include "lqueue/simulator.hpp"
#include "lqueue/transforms.hpp"
#include "lqueue/wiener_hopf.hpp"

struct lq_model {
  lq::LevyModel model;
};

struct lq_ladder {
  explicit lq_ladder(const lq::LevyModel& m, double gauge) : exponents(m, gauge) {}
  lq::LadderExponents exponents;
};

namespace {

thread_local std::string last_error;

lq_status fail(lq_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <typename Body>
lq_status guarded(Body&& body) {
  try {
    body();
    last_error.clear();
    return LQ_OK;
  } catch (const lq::Error& e) {
    return fail(static_cast<lq_status>(static_cast<int>(e.code()) + 1), e.what());
  } catch (const std::bad_alloc&) {
    return fail(LQ_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(LQ_INTERNAL_ERROR, e.what());
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw lq::Error(lq::ErrorCode::invalid_argument, what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

lq::Formula to_formula(lq_formula f) {
  const auto& all = lq::all_formulas();
  if (f < 0 || static_cast<std::size_t>(f) >= all.size()) {
    throw lq::Error(lq::ErrorCode::unknown_formula, "formula id " + std::to_string(f) + " out of range");
  }
  return all[static_cast<std::size_t>(f)];
}

lq::TransformArgs to_args(const lq_args* a) {
  require(a != nullptr, "args must not be NULL");
  lq::TransformArgs t;
  t.q = a->q;
  t.theta = a->theta;
  t.alpha = a->alpha;
  t.beta = a->beta;
  t.gamma = a->gamma;
  t.u = a->u;
  t.v = a->v;
  t.w = a->w;
  t.lambda = a->lambda;
  return t;
}

lq::SimConfig to_config(const lq_sim_config* c) {
  require(c != nullptr, "config must not be NULL");
  lq::SimConfig s;
  s.mode = c->mode == LQ_GRID ? lq::SimMode::grid : lq::SimMode::exact;
  require(c->mode == LQ_GRID || c->mode == LQ_EXACT, "unknown simulation mode");
  s.grid_step = c->grid_step;
  s.q = c->q;
  s.samples = c->samples;
  s.seed = c->seed;
  s.burn_in_horizon = c->burn_in_horizon;
  s.threads = c->threads;
  return s;
}

lq::Side to_side(lq_side side) {
  require(side == LQ_ASCENDING || side == LQ_DESCENDING, "unknown side");
  return side == LQ_ASCENDING ? lq::Side::ascending : lq::Side::descending;
}

void fill(const lq::EstimateWithCI& e, lq_estimate* out) {
  out->mean = e.mean;
  out->se = e.se;
  out->ci_low = e.ci_low;
  out->ci_high = e.ci_high;
  out->samples = e.samples;
}

std::vector<lq::Phase> phases(std::size_t n, const double* weights, const double* decays) {
  std::vector<lq::Phase> out;
  if (n > 0) require(weights != nullptr && decays != nullptr, "phase arrays must not be NULL");
  for (std::size_t i = 0; i < n; ++i) out.push_back({weights[i], decays[i]});
  return out;
}

}  // namespace

extern "C" {

const char* lq_version(void) { return "0.1.0"; }

const char* lq_status_name(lq_status status) {
  if (status == LQ_OK) return "ok";
  const int code = static_cast<int>(status) - 1;
  if (code < 0 || code > static_cast<int>(lq::ErrorCode::internal)) return "unknown_status";
  return lq::error_code_name(static_cast<lq::ErrorCode>(code));
}

const char* lq_last_error(void) { return last_error.c_str(); }

void lq_string_free(char* s) { std::free(s); }

lq_status lq_model_from_file(const char* path, lq_model** out) {
  return guarded([&] {
    require(path != nullptr && out != nullptr, "path and out must not be NULL");
    *out = new lq_model{lq::load_model(path)};
  });
}

lq_status lq_model_from_string(const char* text, lq_model** out) {
  return guarded([&] {
    require(text != nullptr && out != nullptr, "text and out must not be NULL");
    *out = new lq_model{lq::parse_model(text)};
  });
}

lq_status lq_model_create(double drift, double gauss_var, double up_rate, size_t up_phases, const double* up_weights,
                          const double* up_decays, double down_rate, size_t down_phases, const double* down_weights,
                          const double* down_decays, lq_model** out) {
  return guarded([&] {
    require(out != nullptr, "out must not be NULL");
    lq::LevyModel m;
    m.drift = drift;
    m.gauss_var = gauss_var;
    m.up = {up_rate, phases(up_phases, up_weights, up_decays)};
    m.down = {down_rate, phases(down_phases, down_weights, down_decays)};
    *out = new lq_model{std::move(m)};
  });
}

void lq_model_free(lq_model* model) { delete model; }

lq_status lq_model_validate(const lq_model* model, int* valid, char** report) {
  return guarded([&] {
    require(model != nullptr && valid != nullptr, "model and valid must not be NULL");
    const auto r = lq::validate(model->model);
    *valid = r.ok() ? 1 : 0;
    if (report != nullptr) *report = copy_string(r.str());
  });
}

lq_status lq_model_mean_drift(const lq_model* model, double* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "model and out must not be NULL");
    *out = lq::mean_drift(model->model);
  });
}

lq_status lq_model_fingerprint(const lq_model* model, uint64_t* out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "model and out must not be NULL");
    *out = lq::fingerprint(model->model);
  });
}

lq_status lq_model_format(const lq_model* model, char** out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "model and out must not be NULL");
    *out = copy_string(lq::format_model(model->model));
  });
}

lq_status lq_levy_exponent(const lq_model* model, double re, double im, double* out_re, double* out_im) {
  return guarded([&] {
    require(model != nullptr && out_re != nullptr && out_im != nullptr, "NULL argument");
    const lq::cplx v = lq::levy_exponent(model->model, {re, im});
    *out_re = v.real();
    *out_im = v.imag();
  });
}

lq_status lq_laplace_exponent(const lq_model* model, double re, double im, double* out_re, double* out_im) {
  return guarded([&] {
    require(model != nullptr && out_re != nullptr && out_im != nullptr, "NULL argument");
    const lq::cplx v = lq::laplace_exponent(model->model, {re, im});
    *out_re = v.real();
    *out_im = v.imag();
  });
}

lq_status lq_ladder_create(const lq_model* model, double gauge_scale, lq_ladder** out) {
  return guarded([&] {
    require(model != nullptr && out != nullptr, "model and out must not be NULL");
    *out = new lq_ladder(model->model, gauge_scale);
  });
}

void lq_ladder_free(lq_ladder* ladder) { delete ladder; }

lq_status lq_wh_info_at(const lq_ladder* ladder, double q, lq_wh_info* out) {
  return guarded([&] {
    require(ladder != nullptr && out != nullptr, "ladder and out must not be NULL");
    const auto f = ladder->exponents.at(q);
    out->q = f->q;
    out->leading = f->leading;
    out->ascending_gauge = f->ascending.gauge;
    out->descending_gauge = f->descending.gauge;
    out->ascending_roots = f->ascending.zeros.size();
    out->descending_roots = f->descending.zeros.size();
    out->identity_residual = f->residual;
    out->product_residual = f->product_residual;
  });
}

lq_status lq_wh_roots(const lq_ladder* ladder, double q, lq_side side, size_t capacity, double* re, double* im,
                      size_t* count) {
  return guarded([&] {
    require(ladder != nullptr && count != nullptr, "ladder and count must not be NULL");
    const auto f = ladder->exponents.at(q);
    const auto& zeros = to_side(side) == lq::Side::ascending ? f->ascending.zeros : f->descending.zeros;
    *count = zeros.size();
    if (capacity > 0) require(re != nullptr && im != nullptr, "root buffers must not be NULL");
    for (std::size_t i = 0; i < zeros.size() && i < capacity; ++i) {
      re[i] = zeros[i].real();
      im[i] = zeros[i].imag();
    }
  });
}

lq_status lq_wh_dump(const lq_ladder* ladder, double q, char** out) {
  return guarded([&] {
    require(ladder != nullptr && out != nullptr, "ladder and out must not be NULL");
    *out = copy_string(lq::describe(*ladder->exponents.at(q)));
  });
}

lq_status lq_kappa(const lq_ladder* ladder, lq_side side, double q, double theta_re, double theta_im, double* out_re,
                   double* out_im) {
  return guarded([&] {
    require(ladder != nullptr && out_re != nullptr && out_im != nullptr, "NULL argument");
    const lq::cplx v = ladder->exponents.kappa(to_side(side), q, {theta_re, theta_im});
    *out_re = v.real();
    *out_im = v.imag();
  });
}

lq_status lq_kappa_dq(const lq_ladder* ladder, lq_side side, double q, double theta, double* out) {
  return guarded([&] {
    require(ladder != nullptr && out != nullptr, "NULL argument");
    *out = ladder->exponents.kappa_dq(to_side(side), q, theta);
  });
}

size_t lq_formula_count(void) { return lq::all_formulas().size(); }

const char* lq_formula_name(lq_formula formula) {
  const auto& all = lq::all_formulas();
  if (formula < 0 || static_cast<std::size_t>(formula) >= all.size()) return nullptr;
  return lq::formula_name(all[static_cast<std::size_t>(formula)]).data();
}

lq_status lq_formula_from_name(const char* name, lq_formula* out) {
  return guarded([&] {
    require(name != nullptr && out != nullptr, "name and out must not be NULL");
    const lq::Formula f = lq::parse_formula(name);
    const auto& all = lq::all_formulas();
    for (std::size_t i = 0; i < all.size(); ++i)
      if (all[i] == f) *out = static_cast<lq_formula>(i);
  });
}

const char* lq_formula_arguments(lq_formula formula) {
  static const std::vector<std::string> joined = [] {
    std::vector<std::string> out;
    for (lq::Formula f : lq::all_formulas()) {
      std::string s;
      for (auto name : lq::formula_arguments(f)) {
        if (!s.empty()) s += ',';
        s += name;
      }
      out.push_back(s);
    }
    return out;
  }();
  if (formula < 0 || static_cast<std::size_t>(formula) >= joined.size()) return nullptr;
  return joined[static_cast<std::size_t>(formula)].c_str();
}

int lq_formula_invertible(lq_formula formula) {
  const auto& all = lq::all_formulas();
  if (formula < 0 || static_cast<std::size_t>(formula) >= all.size()) return 0;
  return lq::invertible(all[static_cast<std::size_t>(formula)]) ? 1 : 0;
}

lq_status lq_transform(const lq_ladder* ladder, lq_formula formula, const lq_args* args, double* out) {
  return guarded([&] {
    require(ladder != nullptr && out != nullptr, "ladder and out must not be NULL");
    *out = lq::evaluate(ladder->exponents, to_formula(formula), to_args(args)).value;
  });
}

void lq_sim_config_default(lq_sim_config* config) {
  if (config == nullptr) return;
  const lq::SimConfig d;
  config->mode = LQ_EXACT;
  config->grid_step = d.grid_step;
  config->q = d.q;
  config->samples = d.samples;
  config->seed = d.seed;
  config->burn_in_horizon = d.burn_in_horizon;
  config->threads = d.threads;
}

lq_status lq_estimate_formula(const lq_ladder* ladder, lq_formula formula, const lq_args* args,
                              const lq_sim_config* config, lq_estimate* out) {
  return lq_estimate_batch(ladder, formula, 1, args, config, out);
}

lq_status lq_estimate_batch(const lq_ladder* ladder, lq_formula formula, size_t n, const lq_args* args,
                            const lq_sim_config* config, lq_estimate* out) {
  return guarded([&] {
    require(ladder != nullptr && out != nullptr && args != nullptr, "NULL argument");
    require(n > 0, "empty batch");
    const lq::Formula f = to_formula(formula);
    lq::SimConfig c = to_config(config);
    std::vector<lq::FunctionalSpec> specs;
    for (std::size_t i = 0; i < n; ++i) {
      const auto a = to_args(&args[i]);
      require(a.q == args[0].q && a.lambda == args[0].lambda, "batched argument tuples must share q and lambda");
      specs.push_back(lq::functional_for(f, a));
    }
    if (specs.front().kind == lq::FunctionalKind::exponential) c.q = args[0].q;
    const auto estimates = lq::estimate_functionals(ladder->exponents, specs, c);
    for (std::size_t i = 0; i < n; ++i) fill(estimates[i], &out[i]);
  });
}

lq_status lq_compare(double analytic, const lq_estimate* estimate, double threshold, double* z, int* pass) {
  return guarded([&] {
    require(estimate != nullptr && z != nullptr && pass != nullptr, "NULL argument");
    lq::TransformValue t;
    t.value = analytic;
    lq::EstimateWithCI e;
    e.mean = estimate->mean;
    e.se = estimate->se;
    const auto c = lq::compare(t, e, threshold);
    *z = c.z;
    *pass = c.pass ? 1 : 0;
  });
}

lq_status lq_simulate_csv(const lq_ladder* ladder, const lq_sim_config* config, char** out) {
  return guarded([&] {
    require(ladder != nullptr && out != nullptr, "ladder and out must not be NULL");
    std::ostringstream os;
    lq::write_observables_csv(os, ladder->exponents, to_config(config));
    *out = copy_string(os.str());
  });
}

void lq_inversion_options_default(lq_inversion_options* options) {
  if (options == nullptr) return;
  const lq::InversionOptions d;
  options->a = d.a;
  options->terms = d.terms;
  options->euler_terms = d.euler_terms;
  options->tolerance = d.tolerance;
}

lq_status lq_invert(const lq_ladder* ladder, lq_formula formula, const lq_args* args, size_t n, const double* xs,
                    const lq_inversion_options* options, double* cdf, double* atom) {
  return guarded([&] {
    require(ladder != nullptr && cdf != nullptr && atom != nullptr, "NULL argument");
    require(n == 0 || xs != nullptr, "xs must not be NULL");
    lq::InversionOptions o;
    if (options != nullptr) o = {options->a, options->terms, options->euler_terms, options->tolerance};
    const auto r = lq::invert_formula(ladder->exponents, to_formula(formula), to_args(args),
                                      std::vector<double>(xs, xs + n), o);
    *atom = r.atom;
    for (std::size_t i = 0; i < n; ++i) cdf[i] = r.cdf[i];
  });
}

}  // extern "C"
