#include "lqueue/wiener_hopf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <sstream>

#include <unsupported/Eigen/Polynomials>

#include "lqueue/errors.hpp"

namespace lq {

namespace {

using Poly = std::vector<double>;  // increasing degree

Poly mul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

void add_scaled(Poly& acc, const Poly& p, double c) {
  if (acc.size() < p.size()) acc.resize(p.size(), 0.0);
  for (std::size_t i = 0; i < p.size(); ++i) acc[i] += c * p[i];
}

// prod over all factors except `skip`.
Poly product(const std::vector<Poly>& factors, std::size_t skip = static_cast<std::size_t>(-1)) {
  Poly out{1.0};
  for (std::size_t i = 0; i < factors.size(); ++i)
    if (i != skip) out = mul(out, factors[i]);
  return out;
}

Poly numerator_polynomial(const LevyModel& m, double q) {
  std::vector<Poly> up, down;
  for (const auto& p : m.up.phases) up.push_back({p.decay, -1.0});
  for (const auto& p : m.down.phases) down.push_back({p.decay, 1.0});
  const Poly a = product(up);
  const Poly b = product(down);
  const Poly ab = mul(a, b);

  Poly out;
  add_scaled(out, mul({q, -m.drift, -0.5 * m.gauss_var}, ab), 1.0);
  for (std::size_t j = 0; j < up.size(); ++j) {
    const double c = m.up.rate * m.up.phases[j].weight;
    add_scaled(out, mul({0.0, 1.0}, mul(product(up, j), b)), -c);
  }
  for (std::size_t k = 0; k < down.size(); ++k) {
    const double c = m.down.rate * m.down.phases[k].weight;
    add_scaled(out, mul({0.0, 1.0}, mul(a, product(down, k))), c);
  }
  while (out.size() > 1 && out.back() == 0.0) out.pop_back();
  return out;
}

cplx polish(const LevyModel& m, double q, cplx s) {
  cplx best = s;
  double best_res = std::abs(q - laplace_exponent(m, s));
  for (int it = 0; it < 60; ++it) {
    const cplx f = q - laplace_exponent(m, s);
    const cplx df = -laplace_exponent_derivative(m, s);
    if (df == cplx(0.0)) break;
    const cplx step = f / df;
    s -= step;
    const double res = std::abs(q - laplace_exponent(m, s));
    if (res < best_res) {
      best_res = res;
      best = s;
    }
    if (std::abs(step) <= 4e-16 * std::max(1.0, std::abs(s))) break;
  }
  return best;
}

std::vector<cplx> polynomial_roots(const Poly& p) {
  const int degree = static_cast<int>(p.size()) - 1;
  if (degree < 1) return {};
  if (degree == 1) return {cplx(-p[0] / p[1], 0.0)};
  Eigen::VectorXd coeffs(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) coeffs[static_cast<Eigen::Index>(i)] = p[i];
  Eigen::PolynomialSolver<double, Eigen::Dynamic> solver;
  solver.compute(coeffs);
  const auto& r = solver.roots();
  std::vector<cplx> out(r.begin(), r.end());
  return out;
}

std::size_t expected_ascending(const LevyModel& m) {
  return m.up.phases.size() + ((m.gauss_var > 0.0 || m.drift > 0.0) ? 1 : 0);
}

std::size_t expected_descending(const LevyModel& m) {
  return m.down.phases.size() + ((m.gauss_var > 0.0 || m.drift < 0.0) ? 1 : 0);
}

std::string list(const std::vector<cplx>& v) {
  std::ostringstream os;
  os.precision(17);
  os << '[';
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    if (v[i].imag() == 0.0) {
      os << v[i].real();
    } else {
      os << v[i].real() << (v[i].imag() < 0 ? "-" : "+") << std::abs(v[i].imag()) << 'i';
    }
  }
  os << ']';
  return os.str();
}

// d/dq of prod_i (theta + z_i) given dz_i/dq, by the product rule.
cplx product_derivative(const std::vector<cplx>& zeros, const std::vector<cplx>& rates, cplx theta) {
  cplx total = 0.0;
  for (std::size_t i = 0; i < zeros.size(); ++i) {
    cplx term = rates[i];
    for (std::size_t k = 0; k < zeros.size(); ++k)
      if (k != i) term *= theta + zeros[k];
    total += term;
  }
  return total;
}

}  // namespace

cplx RationalFactor::operator()(cplx theta) const {
  cplx v = gauge;
  for (const auto& z : zeros) v *= theta + z;
  for (double p : poles) v /= theta + p;
  return v;
}

CharacteristicRoots characteristic_roots(const LevyModel& model, double q) {
  if (!(q >= 0.0) || !std::isfinite(q)) throw Error(ErrorCode::invalid_argument, "q must be finite and >= 0");
  require_valid(model);

  Poly p = numerator_polynomial(model, q);
  CharacteristicRoots out;
  out.leading = std::abs(p.back());

  const bool origin = (q == 0.0);
  if (origin) {
    // P(0) = q prod(eta) prod(zeta) vanishes exactly; deflate the simple root.
    p.erase(p.begin());
  }

  std::vector<cplx> roots = polynomial_roots(p);
  for (auto& r : roots) {
    if (std::abs(r.imag()) <= 1e-10 * std::max(1.0, std::abs(r))) r = cplx(r.real(), 0.0);
    r = polish(model, q, r);
    if (std::abs(r.imag()) <= 1e-14 * std::max(1.0, std::abs(r))) r = cplx(r.real(), 0.0);
  }
  if (origin) roots.push_back(cplx(0.0));

  for (std::size_t i = 0; i < roots.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      if (std::abs(roots[i] - roots[j]) < kRootClusterTolerance) {
        std::ostringstream os;
        os.precision(17);
        os << "roots " << roots[i] << " and " << roots[j] << " closer than " << kRootClusterTolerance
           << " at q = " << q;
        throw Error(ErrorCode::root_clustering, os.str());
      }
    }
  }

  const std::size_t origin_index = origin ? roots.size() - 1 : roots.size();
  for (std::size_t i = 0; i < roots.size(); ++i) {
    if (i == origin_index) {
      out.descending.push_back(cplx(0.0));
      continue;
    }
    const cplx r = roots[i];
    if (std::abs(r.real()) < kPartitionTolerance) {
      std::ostringstream os;
      os.precision(17);
      os << "root " << r << " within " << kPartitionTolerance << " of the imaginary axis at q = " << q;
      throw Error(ErrorCode::partition, os.str());
    }
    if (r.real() > 0.0) {
      out.ascending.push_back(r);
    } else {
      out.descending.push_back(-r);
    }
  }

  auto by_value = [](const cplx& a, const cplx& b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  };
  std::sort(out.ascending.begin(), out.ascending.end(), by_value);
  std::sort(out.descending.begin(), out.descending.end(), by_value);

  if (out.ascending.size() != expected_ascending(model) || out.descending.size() != expected_descending(model)) {
    std::ostringstream os;
    os << "unexpected root split at q = " << q << ": " << out.ascending.size() << " ascending (expected "
       << expected_ascending(model) << "), " << out.descending.size() << " descending (expected "
       << expected_descending(model) << ")";
    throw Error(ErrorCode::partition, os.str());
  }
  return out;
}

LadderFactorization factorize(const LevyModel& model, double q, double gauge_scale) {
  if (!(gauge_scale > 0.0)) throw Error(ErrorCode::invalid_argument, "gauge scale must be > 0");
  const CharacteristicRoots roots = characteristic_roots(model, q);

  LadderFactorization f;
  f.q = q;
  f.leading = roots.leading;
  const double g = std::sqrt(roots.leading);
  f.ascending.zeros = roots.ascending;
  f.ascending.gauge = g * gauge_scale;
  for (const auto& p : model.up.phases) f.ascending.poles.push_back(p.decay);
  f.descending.zeros = roots.descending;
  f.descending.gauge = g / gauge_scale;
  for (const auto& p : model.down.phases) f.descending.poles.push_back(p.decay);

  for (const auto& r : f.ascending.zeros) f.ascending_rates.push_back(1.0 / laplace_exponent_derivative(model, r));
  for (const auto& r : f.descending.zeros) f.descending_rates.push_back(-1.0 / laplace_exponent_derivative(model, -r));

  const cplx i(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 32; ++k) {
    const double beta = -10.0 + 20.0 * k / 31.0;
    const cplx psi = levy_exponent(model, beta);
    const cplx lhs = q - psi;
    const cplx rhs = f.descending(i * beta) * f.ascending(-i * beta);
    worst = std::max(worst, std::abs(lhs - rhs) / (q + std::abs(psi)));
  }
  f.residual = worst;
  if (q > 0.0) {
    f.product_residual = std::abs((f.ascending(0.0) * f.descending(0.0)).real() - q) / q;
  }
  if (!(f.residual <= kResidualTolerance) || !(f.product_residual <= kResidualTolerance)) {
    std::ostringstream os;
    os << "factorization certificate failed at q = " << q << ": identity residual " << f.residual
       << ", product residual " << f.product_residual;
    throw Error(ErrorCode::residual_exceeded, os.str());
  }
  return f;
}

std::string describe(const LadderFactorization& f) {
  std::ostringstream os;
  os.precision(17);
  auto poles = [](const std::vector<double>& v) {
    std::vector<cplx> c(v.begin(), v.end());
    return list(c);
  };
  os << "q = " << f.q << '\n'
     << "leading = " << f.leading << '\n'
     << "ascending.gauge = " << f.ascending.gauge << '\n'
     << "ascending.roots = " << list(f.ascending.zeros) << '\n'
     << "ascending.poles = " << poles(f.ascending.poles) << '\n'
     << "descending.gauge = " << f.descending.gauge << '\n'
     << "descending.roots = " << list(f.descending.zeros) << '\n'
     << "descending.poles = " << poles(f.descending.poles) << '\n'
     << "product_residual = " << f.product_residual << '\n'
     << "identity_residual = " << f.residual << '\n';
  return os.str();
}

LadderExponents::LadderExponents(LevyModel model, double gauge_scale)
    : model_(std::move(model)), fingerprint_(fingerprint(model_)), gauge_scale_(gauge_scale) {
  require_valid(model_);
  if (!(gauge_scale_ > 0.0)) throw Error(ErrorCode::invalid_argument, "gauge scale must be > 0");
}

std::shared_ptr<const LadderFactorization> LadderExponents::at(double q) const {
  {
    std::shared_lock lock(mutex_);
    if (auto it = cache_.find(q); it != cache_.end()) return it->second;
  }
  auto built = std::make_shared<const LadderFactorization>(factorize(model_, q, gauge_scale_));
  std::unique_lock lock(mutex_);
  return cache_.emplace(q, std::move(built)).first->second;
}

std::size_t LadderExponents::cache_size() const {
  std::shared_lock lock(mutex_);
  return cache_.size();
}

cplx LadderExponents::kappa(Side side, double alpha, cplx theta) const {
  if (theta.real() < 0.0) throw Error(ErrorCode::invalid_argument, "kappa needs Re(theta) >= 0");
  const auto f = at(alpha);
  return side == Side::ascending ? f->ascending(theta) : f->descending(theta);
}

cplx LadderExponents::kappa_dq_analytic(Side side, double q, cplx theta) const {
  const auto f = at(q);
  const RationalFactor& factor = side == Side::ascending ? f->ascending : f->descending;
  const auto& rates = side == Side::ascending ? f->ascending_rates : f->descending_rates;
  cplx scale = factor.gauge;
  for (double p : factor.poles) scale /= theta + p;
  return scale * product_derivative(factor.zeros, rates, theta);
}

double LadderExponents::kappa_dq(Side side, double q, double theta) const {
  const cplx exact = kappa_dq_analytic(side, q, theta);
  const double h = 1e-6 * std::max(1.0, q);
  auto k = [&](double a) { return kappa(side, a, theta).real(); };
  double fd = 0.0;
  if (q >= 2.0 * h) {
    fd = (k(q + h) - k(q - h)) / (2.0 * h);
  } else {
    fd = (-3.0 * k(q) + 4.0 * k(q + h) - k(q + 2.0 * h)) / (2.0 * h);
  }
  const double scale = std::max(std::abs(exact), std::abs(fd));
  const double rounding = 100.0 * std::numeric_limits<double>::epsilon() * std::abs(k(q)) / h;
  if (std::abs(exact.imag()) > 1e-12 * std::max(1.0, std::abs(exact)) ||
      std::abs(exact.real() - fd) > kDerivativeTolerance * scale + rounding) {
    std::ostringstream os;
    os.precision(12);
    os << "q-derivative mismatch at q = " << q << ", theta = " << theta << ": analytic " << exact
       << ", finite difference " << fd;
    throw Error(ErrorCode::derivative_mismatch, os.str());
  }
  return exact.real();
}

}  // namespace lq
