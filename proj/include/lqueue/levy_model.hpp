#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

namespace lq {

using cplx = std::complex<double>;

/// One exponential component of a hyperexponential jump-size law.
struct Phase {
  double weight = 0.0;
  double decay = 1.0;
};

/// Jumps of one sign: Poisson arrivals at `rate`, magnitudes with density
/// sum_j weight_j * decay_j * exp(-decay_j x) on x > 0.
struct JumpSide {
  double rate = 0.0;
  std::vector<Phase> phases;

  double mean_size() const;
  bool empty() const { return rate == 0.0; }
};

/// Driving process X: drift, Brownian variance rate and two-sided
/// hyperexponential compound Poisson jumps.
struct LevyModel {
  double drift = 0.0;
  double gauss_var = 0.0;
  JumpSide up;
  JumpSide down;

  bool spectrally_positive() const { return down.empty(); }
  bool spectrally_negative() const { return up.empty(); }
};

struct ValidationReport {
  std::vector<std::string> violations;

  bool ok() const { return violations.empty(); }
  std::string str() const;
};

/// Relative distance to a pole below which evaluation is refused.
inline constexpr double kPoleTolerance = 1e-9;

/// psi(theta) = log E exp(i theta X_1), continued to complex theta inside the
/// strip of analyticity.
cplx levy_exponent(const LevyModel& model, cplx theta);

/// psi(-i s) = log E exp(s X_1), as the rational function of s.
cplx laplace_exponent(const LevyModel& model, cplx s);

/// d/ds of laplace_exponent.
cplx laplace_exponent_derivative(const LevyModel& model, cplx s);

/// E X_1.
double mean_drift(const LevyModel& model);

ValidationReport validate(const LevyModel& model);

/// Throws Error(invalid_model) listing every violation.
void require_valid(const LevyModel& model);

/// Stable 64-bit hash of the model parameters (bit patterns of the doubles).
std::uint64_t fingerprint(const LevyModel& model);

}  // namespace lq
