#pragma once

#include <complex>
#include <map>
#include <memory>
#include <shared_mutex>
#include <string>
#include <vector>

#include "lqueue/levy_model.hpp"

namespace lq {

enum class Side { ascending, descending };

/// gauge * prod_i (theta + zeros_i) / prod_j (theta + poles_j).
///
/// Zeros are stored as the (positive real part) roots rho_i, so the factor
/// vanishes at theta = -rho_i. Poles are the jump decay rates of the side.
struct RationalFactor {
  std::vector<cplx> zeros;
  std::vector<double> poles;
  double gauge = 1.0;

  cplx operator()(cplx theta) const;

  /// zeros.size() - poles.size(): the factor grows like theta^excess.
  int excess() const { return static_cast<int>(zeros.size()) - static_cast<int>(poles.size()); }
};

struct CharacteristicRoots {
  std::vector<cplx> ascending;   // roots s of q - psi(-is) with Re s > 0
  std::vector<cplx> descending;  // -s for roots with Re s < 0, plus 0 when q = 0
  double leading = 0.0;          // |leading coefficient| of the numerator polynomial
};

struct LadderFactorization {
  double q = 0.0;
  double leading = 0.0;
  RationalFactor ascending;   // kappa-bar(q, .)
  RationalFactor descending;  // kappa-underbar(q, .)
  // d zero / d q for every stored zero, same order as the factors.
  std::vector<cplx> ascending_rates;
  std::vector<cplx> descending_rates;
  double residual = 0.0;          // max relative residual of the factor identity on the beta grid
  double product_residual = 0.0;  // |kbar(q,0) kunder(q,0) - q| / q, 0 when q = 0
};

inline constexpr double kRootClusterTolerance = 1e-7;
inline constexpr double kPartitionTolerance = 1e-9;
inline constexpr double kResidualTolerance = 1e-8;
inline constexpr double kDerivativeTolerance = 1e-5;

/// All roots of P(s) = (q - psi(-is)) prod(eta_j - s) prod(zeta_k + s),
/// partitioned by half plane. Roots are Newton-polished on q - psi(-is).
CharacteristicRoots characteristic_roots(const LevyModel& model, double q);

/// Builds both ladder exponents at killing rate q and certifies them on a
/// 32-point beta grid in [-10, 10]. gauge_scale multiplies the ascending
/// gauge and divides the descending one; every exported transform is
/// invariant under it.
LadderFactorization factorize(const LevyModel& model, double q, double gauge_scale = 1.0);

/// Human-readable `key = value` dump of a factorization.
std::string describe(const LadderFactorization& f);

/// Ladder exponents of one model with a per-q factorization cache.
/// Thread safe: concurrent lookups share a lock, distinct q values may be
/// inserted concurrently.
class LadderExponents {
 public:
  explicit LadderExponents(LevyModel model, double gauge_scale = 1.0);

  const LevyModel& model() const { return model_; }
  std::uint64_t model_fingerprint() const { return fingerprint_; }
  double gauge_scale() const { return gauge_scale_; }

  std::shared_ptr<const LadderFactorization> at(double q) const;

  cplx kappa(Side side, double alpha, cplx theta) const;

  /// Partial derivative in the first argument by implicit differentiation
  /// of the roots. No finite-difference check.
  cplx kappa_dq_analytic(Side side, double q, cplx theta) const;

  /// Same derivative for real theta, cross-checked against a second-order
  /// finite difference with step 1e-6 (central when q allows it, one-sided
  /// otherwise). Throws derivative_mismatch above 1e-5 relative.
  double kappa_dq(Side side, double q, double theta) const;

  double kappa_dq0(double theta) const { return kappa_dq(Side::ascending, 0.0, theta); }

  std::size_t cache_size() const;

 private:
  LevyModel model_;
  std::uint64_t fingerprint_;
  double gauge_scale_;
  mutable std::shared_mutex mutex_;
  mutable std::map<double, std::shared_ptr<const LadderFactorization>> cache_;
};

}  // namespace lq
