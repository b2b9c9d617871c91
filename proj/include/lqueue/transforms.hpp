#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "lqueue/wiener_hopf.hpp"

namespace lq {

// Closed-form transforms of workload functionals for a queue started in
// stationarity, written as ratios of ladder exponents. Notation in the
// comments: kb(q, t) is the ascending exponent, ku(q, t) the descending one,
// e_q an independent Exp(q) time, tau the residual busy period.

enum class Formula {
  stationary,               // E exp(-theta Q_0)
  min_workload,             // E exp(-theta Qmin_{e_q})
  transient_factor,         // E exp(-theta (X - Xmin)_{e_q})
  exp_initial_min,          // E exp(-theta Qmin_{e_q}) when Q_0 ~ Exp(lambda)
  busy_period,              // E exp(-q tau)
  min_on_ongoing,           // E(exp(-theta Qmin_{e_q}); tau > e_q)
  ongoing_joint,            // joint law on tau > e_q
  unused_capacity,          // E(exp(-theta U_{e_q}); tau < e_q)
  d_tau,                    // E(exp(-alpha D - u tau); tau < e_q)
  finished_joint,           // joint law on tau < e_q
  conditional_min,          // E(exp(-theta Qmin_{e_q}) | tau > e_q)
  limit_conditional_joint,  // q -> 0 limit of E(exp(-theta Qmin - alpha Q_{e_q}) | tau > e_q)
  residual_busy_limit,      // residual-life transform of tau
  positive_part,            // E(exp(-theta X_{e_q}); X_{e_q} > 0)
  residual_life_q0,         // residual-life transform of Q_0
};

struct TransformArgs {
  double q = 0.0;
  double theta = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double gamma = 0.0;
  double u = 0.0;
  double v = 0.0;
  double w = 0.0;
  double lambda = 0.0;
};

struct TransformValue {
  Formula formula = Formula::stationary;
  TransformArgs args;
  double value = 0.0;
};

std::string_view formula_name(Formula f);
Formula parse_formula(std::string_view name);
const std::vector<Formula>& all_formulas();

/// Argument names a formula reads, in CSV column order.
std::vector<std::string_view> formula_arguments(Formula f);

/// Imaginary residue allowed when a value is returned as real.
inline constexpr double kImagResidue = 1e-12;

double stationary_transform(const LadderExponents& lx, double theta);
double min_workload_transform(const LadderExponents& lx, double q, double theta);
double transient_workload_factor(const LadderExponents& lx, double q, double theta);
double exp_initial_min_transform(const LadderExponents& lx, double q, double theta, double lambda);
double busy_period_transform(const LadderExponents& lx, double q);
double min_on_ongoing(const LadderExponents& lx, double q, double theta);
double ongoing_joint_transform(const LadderExponents& lx, double q, double theta, double alpha, double beta,
                               double gamma);
double unused_capacity_transform(const LadderExponents& lx, double q, double theta);
double d_tau_transform(const LadderExponents& lx, double q, double alpha, double u);
double finished_joint_transform(const LadderExponents& lx, double q, double alpha, double beta, double gamma,
                                double u, double v, double w);
double conditional_min_transform(const LadderExponents& lx, double q, double theta);
double limit_conditional_joint_transform(const LadderExponents& lx, double theta, double alpha);
double residual_busy_limit_transform(const LadderExponents& lx, double theta);
double positive_part_transform(const LadderExponents& lx, double q, double theta);
double residual_life_q0_transform(const LadderExponents& lx, double theta);

/// E Q_0 = d/dtheta log kb(0, theta) at 0.
double stationary_mean(const LadderExponents& lx);
/// E tau = kb'(0, 0) / kb(0, 0), derivative in the first argument.
double busy_period_mean(const LadderExponents& lx);

TransformValue evaluate(const LadderExponents& lx, Formula f, const TransformArgs& args);

/// Formulas whose theta-argument is a proper Laplace transform of a
/// nonnegative law and can therefore be inverted.
bool invertible(Formula f);

/// The transform of an invertible formula at complex theta (Re >= 0), all
/// other arguments taken from `args`.
cplx evaluate_at(const LadderExponents& lx, Formula f, const TransformArgs& args, cplx theta);

/// Mass at zero of the law behind an invertible formula, from the rational
/// structure of the exponents (theta -> infinity limit).
double atom_at_zero(const LadderExponents& lx, Formula f, const TransformArgs& args);

}  // namespace lq
