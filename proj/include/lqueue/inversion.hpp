#pragma once

#include <functional>
#include <vector>

#include "lqueue/levy_model.hpp"
#include "lqueue/transforms.hpp"

namespace lq {

/// Euler-summation Fourier-series inversion parameters. The discretization
/// error is of order exp(-a); `terms` plain terms are followed by binomial
/// averaging over `euler_terms` more.
struct InversionOptions {
  double a = 25.0;
  int terms = 38;
  int euler_terms = 11;
  double tolerance = 1e-7;  // max change between consecutive Euler sums
};

/// CDF of a law on [0, inf) with Laplace-Stieltjes transform `transform` and
/// mass `atom` at zero, evaluated on `xs`. Throws oscillation when the Euler
/// sums have not settled or a value leaves [atom - 1e-6, 1 + 1e-6].
std::vector<double> invert_cdf(const std::function<cplx(cplx)>& transform, double atom, const std::vector<double>& xs,
                               const InversionOptions& options = {});

struct InversionResult {
  double atom = 0.0;
  std::vector<double> x;
  std::vector<double> cdf;
};

/// Inverts the theta-argument of an invertible formula. Also checks that
/// the transform is 1 at theta = 0 and that it tends to the atom.
InversionResult invert_formula(const LadderExponents& lx, Formula f, const TransformArgs& args,
                               const std::vector<double>& xs, const InversionOptions& options = {});

}  // namespace lq
