#include "lqueue/inversion.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "lqueue/errors.hpp"

namespace lq {

namespace {

constexpr double kRangeSlack = 1e-6;
constexpr double kAtomProbe = 1e10;
constexpr double kAtomTolerance = 1e-6;

// f(t) from its Laplace transform g, by Euler summation of the Bromwich
// trapezoid series.
double euler_invert(const std::function<cplx(cplx)>& g, double t, const InversionOptions& o) {
  const double a = o.a;
  const int n = o.terms;
  const int m = o.euler_terms;
  const double scale = std::exp(a / 2.0) / t;
  const double step = std::numbers::pi / t;

  std::vector<double> partial(n + m + 1);
  double sum = 0.5 * g(cplx(a / (2.0 * t), 0.0)).real();
  partial[0] = sum;
  for (int k = 1; k <= n + m; ++k) {
    const double term = g(cplx(a / (2.0 * t), k * step)).real();
    sum += (k % 2 == 0 ? term : -term);
    partial[k] = sum;
  }

  auto euler = [&](int start) {
    double binom = 1.0, acc = 0.0;
    for (int k = 0; k <= m; ++k) {
      acc += binom * partial[start + k];
      binom = binom * (m - k) / (k + 1);
    }
    return scale * acc / std::ldexp(1.0, m);
  };
  const double value = euler(n);
  const double previous = euler(n - 1);
  if (std::abs(value - previous) > o.tolerance) {
    std::ostringstream os;
    os << "inversion at x = " << t << " did not settle: consecutive Euler sums differ by "
       << std::abs(value - previous);
    throw Error(ErrorCode::oscillation, os.str());
  }
  return value;
}

}  // namespace

std::vector<double> invert_cdf(const std::function<cplx(cplx)>& transform, double atom, const std::vector<double>& xs,
                               const InversionOptions& options) {
  if (options.terms < 1 || options.euler_terms < 0 || !(options.a > 0.0)) {
    throw Error(ErrorCode::invalid_argument, "invalid inversion options");
  }
  // Laplace transform of F - atom on (0, inf).
  auto g = [&](cplx s) { return (transform(s) - atom) / s; };
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) {
    if (!std::isfinite(x)) throw Error(ErrorCode::invalid_argument, "grid points must be finite");
    double value;
    if (x < 0.0) {
      value = 0.0;
    } else if (x == 0.0) {
      value = atom;
    } else {
      value = atom + euler_invert(g, x, options);
      if (value < atom - kRangeSlack || value > 1.0 + kRangeSlack) {
        std::ostringstream os;
        os << "inverted CDF " << value << " at x = " << x << " outside [" << atom << ", 1]";
        throw Error(ErrorCode::oscillation, os.str());
      }
    }
    out.push_back(value);
  }
  return out;
}

InversionResult invert_formula(const LadderExponents& lx, Formula f, const TransformArgs& args,
                               const std::vector<double>& xs, const InversionOptions& options) {
  if (!invertible(f)) {
    throw Error(ErrorCode::invalid_argument,
                "formula '" + std::string(formula_name(f)) + "' is not the transform of a nonnegative law");
  }
  auto transform = [&](cplx s) { return evaluate_at(lx, f, args, s); };
  const double at_zero = transform(0.0).real();
  if (std::abs(at_zero - 1.0) > kAtomTolerance) {
    std::ostringstream os;
    os << "transform at theta = 0 is " << at_zero << ", not 1";
    throw Error(ErrorCode::invalid_argument, os.str());
  }
  InversionResult r;
  r.atom = atom_at_zero(lx, f, args);
  const double tail = transform(kAtomProbe).real();
  if (std::abs(tail - r.atom) > kAtomTolerance) {
    std::ostringstream os;
    os << "atom " << r.atom << " disagrees with the transform at theta = " << kAtomProbe << " (" << tail << ")";
    throw Error(ErrorCode::internal, os.str());
  }
  r.x = xs;
  r.cdf = invert_cdf(transform, r.atom, xs, options);
  return r;
}

}  // namespace lq
