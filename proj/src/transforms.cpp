#include "lqueue/transforms.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "lqueue/errors.hpp"

namespace lq {

namespace {

struct NamedFormula {
  Formula formula;
  std::string_view name;
  std::vector<std::string_view> args;
};

const std::vector<NamedFormula>& table() {
  static const std::vector<NamedFormula> t = {
      {Formula::stationary, "stationary", {"theta"}},
      {Formula::min_workload, "min_workload", {"q", "theta"}},
      {Formula::transient_factor, "transient_factor", {"q", "theta"}},
      {Formula::exp_initial_min, "exp_initial_min", {"q", "theta", "lambda"}},
      {Formula::busy_period, "busy_period", {"q"}},
      {Formula::min_on_ongoing, "min_on_ongoing", {"q", "theta"}},
      {Formula::ongoing_joint, "ongoing_joint", {"q", "theta", "alpha", "beta", "gamma"}},
      {Formula::unused_capacity, "unused_capacity", {"q", "theta"}},
      {Formula::d_tau, "d_tau", {"q", "alpha", "u"}},
      {Formula::finished_joint, "finished_joint", {"q", "alpha", "beta", "gamma", "u", "v", "w"}},
      {Formula::conditional_min, "conditional_min", {"q", "theta"}},
      {Formula::limit_conditional_joint, "limit_conditional_joint", {"theta", "alpha"}},
      {Formula::residual_busy_limit, "residual_busy_limit", {"theta"}},
      {Formula::positive_part, "positive_part", {"q", "theta"}},
      {Formula::residual_life_q0, "residual_life_q0", {"theta"}},
  };
  return t;
}

double real_of(cplx z, const char* what) {
  if (std::abs(z.imag()) > kImagResidue * std::max(1.0, std::abs(z))) {
    std::ostringstream os;
    os << what << ": imaginary residue " << z.imag() << " for real arguments";
    throw Error(ErrorCode::internal, os.str());
  }
  return z.real();
}

void need(bool ok, const char* msg) {
  if (!ok) throw Error(ErrorCode::invalid_argument, msg);
}

void need_q(double q) { need(q > 0.0 && std::isfinite(q), "q must be > 0"); }
void need_nonneg(double x, const char* name) {
  if (!(x >= 0.0) || !std::isfinite(x)) throw Error(ErrorCode::invalid_argument, std::string(name) + " must be >= 0");
}

cplx kb(const LadderExponents& lx, double q, cplx t) { return lx.kappa(Side::ascending, q, t); }
cplx ku(const LadderExponents& lx, double q, cplx t) { return lx.kappa(Side::descending, q, t); }

// Complex-theta versions of the single-theta transforms.
cplx stationary_c(const LadderExponents& lx, cplx theta) { return kb(lx, 0, 0) / kb(lx, 0, theta); }

cplx min_workload_c(const LadderExponents& lx, double q, cplx theta) {
  return (kb(lx, 0, 0) / kb(lx, 0, theta)) * (kb(lx, q, theta) / kb(lx, q, 0));
}

cplx transient_c(const LadderExponents& lx, double q, cplx theta) { return kb(lx, q, 0) / kb(lx, q, theta); }

cplx exp_initial_c(const LadderExponents& lx, double q, cplx theta, double lambda) {
  return 1.0 - (theta / (lambda + theta)) * (ku(lx, q, 0) / ku(lx, q, lambda));
}

cplx conditional_min_c(const LadderExponents& lx, double q, cplx theta) {
  if (lx.at(q)->ascending.zeros.empty()) {
    throw Error(ErrorCode::invalid_argument, "the busy period is identically zero: tau > e_q has probability 0");
  }
  const cplx k00 = kb(lx, 0, 0);
  const cplx kq0 = kb(lx, q, 0);
  if (std::abs(kq0 - k00) < 1e-12 * std::abs(k00)) {
    std::ostringstream os;
    os << "q = " << q << " too small: kb(q,0) - kb(0,0) lost 12 digits; use limit_conditional_joint";
    throw Error(ErrorCode::small_q, os.str());
  }
  const cplx k0t = kb(lx, 0, theta);
  return (k00 / k0t) * (kb(lx, q, theta) - k0t) / (kq0 - k00);
}

cplx limit_conditional_c(const LadderExponents& lx, cplx theta, double alpha) {
  const cplx slope0 = lx.kappa_dq_analytic(Side::ascending, 0.0, 0.0);
  if (std::abs(slope0) == 0.0) {
    throw Error(ErrorCode::invalid_argument, "kb'(0,0) = 0: the busy period is identically zero");
  }
  const cplx t = theta + alpha;
  const cplx num = lx.kappa_dq_analytic(Side::ascending, 0.0, t) / kb(lx, 0, t);
  const cplx den = slope0 / kb(lx, 0, 0);
  return (kb(lx, 0, 0) / kb(lx, 0, alpha)) * num / den;
}

cplx residual_life_q0_c(const LadderExponents& lx, cplx theta) {
  if (theta == cplx(0.0)) return 1.0;
  return (1.0 - stationary_c(lx, theta)) / (theta * stationary_mean(lx));
}

// theta -> infinity limit of kb(q,0)/kb(q,theta).
double ascending_ratio_limit(const LadderExponents& lx, double q) {
  const auto f = lx.at(q);
  if (f->ascending.excess() > 0) return 0.0;
  return real_of(f->ascending(0.0), "ascending ratio limit") / f->ascending.gauge;
}

}  // namespace

std::string_view formula_name(Formula f) {
  for (const auto& e : table())
    if (e.formula == f) return e.name;
  return "unknown";
}

Formula parse_formula(std::string_view name) {
  for (const auto& e : table())
    if (e.name == name) return e.formula;
  throw Error(ErrorCode::unknown_formula, "unknown formula '" + std::string(name) + "'");
}

const std::vector<Formula>& all_formulas() {
  static const std::vector<Formula> all = [] {
    std::vector<Formula> v;
    for (const auto& e : table()) v.push_back(e.formula);
    return v;
  }();
  return all;
}

std::vector<std::string_view> formula_arguments(Formula f) {
  for (const auto& e : table())
    if (e.formula == f) return e.args;
  return {};
}

double stationary_transform(const LadderExponents& lx, double theta) {
  need_nonneg(theta, "theta");
  return real_of(stationary_c(lx, theta), "stationary");
}

double min_workload_transform(const LadderExponents& lx, double q, double theta) {
  need_q(q);
  need_nonneg(theta, "theta");
  return real_of(min_workload_c(lx, q, theta), "min_workload");
}

double transient_workload_factor(const LadderExponents& lx, double q, double theta) {
  need_q(q);
  need_nonneg(theta, "theta");
  return real_of(transient_c(lx, q, theta), "transient_factor");
}

double exp_initial_min_transform(const LadderExponents& lx, double q, double theta, double lambda) {
  need_q(q);
  need_nonneg(theta, "theta");
  need(lambda > 0.0, "lambda must be > 0");
  return real_of(exp_initial_c(lx, q, theta, lambda), "exp_initial_min");
}

double busy_period_transform(const LadderExponents& lx, double q) {
  need_q(q);
  return real_of(kb(lx, 0, 0) / kb(lx, q, 0), "busy_period");
}

double min_on_ongoing(const LadderExponents& lx, double q, double theta) {
  need_q(q);
  need_nonneg(theta, "theta");
  const cplx k0t = kb(lx, 0, theta);
  return real_of(kb(lx, 0, 0) * (kb(lx, q, theta) - k0t) / (k0t * kb(lx, q, 0)), "min_on_ongoing");
}

double ongoing_joint_transform(const LadderExponents& lx, double q, double theta, double alpha, double beta,
                               double gamma) {
  need_q(q);
  need_nonneg(theta, "theta");
  need_nonneg(alpha, "alpha");
  need_nonneg(beta, "beta");
  need_nonneg(gamma, "gamma");
  const double ta = theta + alpha;
  const cplx k0 = kb(lx, 0, ta);
  const cplx v = (q / (beta + q)) * kb(lx, 0, 0) * (kb(lx, q + beta, ta) - k0) / (k0 * kb(lx, q + gamma, alpha));
  return real_of(v, "ongoing_joint");
}

double unused_capacity_transform(const LadderExponents& lx, double q, double theta) {
  need_q(q);
  need_nonneg(theta, "theta");
  const cplx kq = ku(lx, q, theta);
  return real_of((kb(lx, 0, 0) / kb(lx, q, 0)) * (kq - ku(lx, 0, theta)) / kq, "unused_capacity");
}

double d_tau_transform(const LadderExponents& lx, double q, double alpha, double u) {
  need_q(q);
  need_nonneg(alpha, "alpha");
  need_nonneg(u, "u");
  return real_of(kb(lx, 0, 0) * (ku(lx, q + u, alpha) - ku(lx, 0, alpha)) / (q + u), "d_tau");
}

double finished_joint_transform(const LadderExponents& lx, double q, double alpha, double beta, double gamma,
                                double u, double v, double w) {
  need_q(q);
  for (auto [x, n] : std::array<std::pair<double, const char*>, 6>{
           {{alpha, "alpha"}, {beta, "beta"}, {gamma, "gamma"}, {u, "u"}, {v, "v"}, {w, "w"}}})
    need_nonneg(x, n);
  const double ab = alpha + beta;
  const cplx value = (q / (q + u)) * kb(lx, 0, 0) * (ku(lx, q + u, ab) - ku(lx, 0, ab)) /
                     (kb(lx, q + w, gamma) * ku(lx, q + v, beta));
  return real_of(value, "finished_joint");
}

double conditional_min_transform(const LadderExponents& lx, double q, double theta) {
  need_q(q);
  need_nonneg(theta, "theta");
  return real_of(conditional_min_c(lx, q, theta), "conditional_min");
}

double limit_conditional_joint_transform(const LadderExponents& lx, double theta, double alpha) {
  need_nonneg(theta, "theta");
  need_nonneg(alpha, "alpha");
  // Run the finite-difference cross-check on the derivatives used.
  lx.kappa_dq0(0.0);
  lx.kappa_dq0(theta + alpha);
  return real_of(limit_conditional_c(lx, theta, alpha), "limit_conditional_joint");
}

double busy_period_mean(const LadderExponents& lx) {
  return lx.kappa_dq0(0.0) / real_of(kb(lx, 0, 0), "busy_period_mean");
}

double stationary_mean(const LadderExponents& lx) {
  const auto f = lx.at(0.0);
  cplx m = 0.0;
  for (const auto& z : f->ascending.zeros) m += 1.0 / z;
  for (double p : f->ascending.poles) m -= 1.0 / p;
  return real_of(m, "stationary_mean");
}

double residual_busy_limit_transform(const LadderExponents& lx, double theta) {
  need_nonneg(theta, "theta");
  if (theta == 0.0) return 1.0;
  const double mean = busy_period_mean(lx);
  need(mean > 0.0, "E tau must be > 0");
  return (1.0 - busy_period_transform(lx, theta)) / (theta * mean);
}

double positive_part_transform(const LadderExponents& lx, double q, double theta) {
  need_q(q);
  need_nonneg(theta, "theta");
  const double d = lx.kappa_dq(Side::ascending, q, theta);
  return q * d / real_of(kb(lx, q, theta), "positive_part");
}

double residual_life_q0_transform(const LadderExponents& lx, double theta) {
  need_nonneg(theta, "theta");
  need(stationary_mean(lx) > 0.0, "E Q_0 must be > 0");
  return real_of(residual_life_q0_c(lx, theta), "residual_life_q0");
}

TransformValue evaluate(const LadderExponents& lx, Formula f, const TransformArgs& a) {
  TransformValue out{f, a, 0.0};
  switch (f) {
    case Formula::stationary: out.value = stationary_transform(lx, a.theta); break;
    case Formula::min_workload: out.value = min_workload_transform(lx, a.q, a.theta); break;
    case Formula::transient_factor: out.value = transient_workload_factor(lx, a.q, a.theta); break;
    case Formula::exp_initial_min: out.value = exp_initial_min_transform(lx, a.q, a.theta, a.lambda); break;
    case Formula::busy_period: out.value = busy_period_transform(lx, a.q); break;
    case Formula::min_on_ongoing: out.value = min_on_ongoing(lx, a.q, a.theta); break;
    case Formula::ongoing_joint:
      out.value = ongoing_joint_transform(lx, a.q, a.theta, a.alpha, a.beta, a.gamma);
      break;
    case Formula::unused_capacity: out.value = unused_capacity_transform(lx, a.q, a.theta); break;
    case Formula::d_tau: out.value = d_tau_transform(lx, a.q, a.alpha, a.u); break;
    case Formula::finished_joint:
      out.value = finished_joint_transform(lx, a.q, a.alpha, a.beta, a.gamma, a.u, a.v, a.w);
      break;
    case Formula::conditional_min: out.value = conditional_min_transform(lx, a.q, a.theta); break;
    case Formula::limit_conditional_joint:
      out.value = limit_conditional_joint_transform(lx, a.theta, a.alpha);
      break;
    case Formula::residual_busy_limit: out.value = residual_busy_limit_transform(lx, a.theta); break;
    case Formula::positive_part: out.value = positive_part_transform(lx, a.q, a.theta); break;
    case Formula::residual_life_q0: out.value = residual_life_q0_transform(lx, a.theta); break;
  }
  return out;
}

bool invertible(Formula f) {
  switch (f) {
    case Formula::stationary:
    case Formula::min_workload:
    case Formula::transient_factor:
    case Formula::exp_initial_min:
    case Formula::conditional_min:
    case Formula::limit_conditional_joint:
    case Formula::residual_life_q0:
      return true;
    default:
      return false;
  }
}

cplx evaluate_at(const LadderExponents& lx, Formula f, const TransformArgs& a, cplx theta) {
  if (theta.real() < 0.0) throw Error(ErrorCode::invalid_argument, "Re(theta) must be >= 0");
  switch (f) {
    case Formula::stationary: return stationary_c(lx, theta);
    case Formula::min_workload: need_q(a.q); return min_workload_c(lx, a.q, theta);
    case Formula::transient_factor: need_q(a.q); return transient_c(lx, a.q, theta);
    case Formula::exp_initial_min:
      need_q(a.q);
      need(a.lambda > 0.0, "lambda must be > 0");
      return exp_initial_c(lx, a.q, theta, a.lambda);
    case Formula::conditional_min: need_q(a.q); return conditional_min_c(lx, a.q, theta);
    case Formula::limit_conditional_joint:
      need(a.alpha == 0.0, "inversion of limit_conditional_joint needs alpha = 0");
      return limit_conditional_c(lx, theta, 0.0);
    case Formula::residual_life_q0: return residual_life_q0_c(lx, theta);
    default:
      throw Error(ErrorCode::invalid_argument,
                  "formula '" + std::string(formula_name(f)) + "' is not a single-variable Laplace transform");
  }
}

double atom_at_zero(const LadderExponents& lx, Formula f, const TransformArgs& a) {
  switch (f) {
    case Formula::stationary: return ascending_ratio_limit(lx, 0.0);
    case Formula::min_workload: return busy_period_transform(lx, a.q);
    case Formula::transient_factor: need_q(a.q); return ascending_ratio_limit(lx, a.q);
    case Formula::exp_initial_min: {
      need_q(a.q);
      need(a.lambda > 0.0, "lambda must be > 0");
      return real_of(1.0 - ku(lx, a.q, 0) / ku(lx, a.q, a.lambda), "exp_initial_min atom");
    }
    case Formula::conditional_min:
    case Formula::limit_conditional_joint:
    case Formula::residual_life_q0:
      return 0.0;
    default:
      throw Error(ErrorCode::invalid_argument,
                  "formula '" + std::string(formula_name(f)) + "' is not a single-variable Laplace transform");
  }
}

}  // namespace lq
