#pragma once

// Reference computations used by the tests. They are written from the model
// definition directly and share no code with the library numerics.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "lqueue/levy_model.hpp"
#include "lqueue/model_io.hpp"

namespace lqtest {

using cplx = std::complex<double>;

inline lq::LevyModel bm_model() { return lq::parse_model("drift = -1\ngauss_var = 1\n"); }

inline lq::LevyModel spos_model() {
  return lq::parse_model("drift = -1\nup.rate = 0.5\nup.phases = [(1, 1)]\n");
}

inline lq::LevyModel sneg_model() {
  return lq::parse_model("drift = 0\ngauss_var = 1\ndown.rate = 1\ndown.phases = [(1, 2)]\n");
}

inline lq::LevyModel two_sided_model() {
  return lq::parse_model(
      "drift = -0.5\ngauss_var = 0.8\n"
      "up.rate = 0.7\nup.phases = [(0.4, 1.5), (0.6, 3)]\n"
      "down.rate = 0.9\ndown.phases = [(0.3, 0.8), (0.7, 2.5)]\n");
}

// log E exp(i theta X_1) summed term by term from the jump densities.
inline cplx psi(const lq::LevyModel& m, cplx theta) {
  const cplx i(0.0, 1.0);
  cplx v = i * m.drift * theta - 0.5 * m.gauss_var * theta * theta;
  for (const auto& p : m.up.phases) v += m.up.rate * p.weight * (p.decay / (p.decay - i * theta) - 1.0);
  for (const auto& p : m.down.phases) v += m.down.rate * p.weight * (p.decay / (p.decay + i * theta) - 1.0);
  return v;
}

// Brownian motion with drift mu, variance s2: roots of q - mu s - s2 s^2 / 2.
inline double bm_ascending_root(double mu, double s2, double q) { return (-mu + std::sqrt(mu * mu + 2 * q * s2)) / s2; }
inline double bm_descending_root(double mu, double s2, double q) { return (mu + std::sqrt(mu * mu + 2 * q * s2)) / s2; }

// Spectrally negative models: the unique root s >= 0 of log E exp(s X_1) = q
// (largest root when q = 0), by bisection.
inline double phi_inverse(const lq::LevyModel& m, double q) {
  auto phi = [&](double s) { return psi(m, cplx(0.0, -s)).real(); };
  double lo = 0.0, hi = 1.0;
  if (q == 0.0) {
    lo = 1e-9;
    while (phi(lo) >= 0.0) lo *= 0.5;
    hi = std::max(1.0, lo);
  }
  while (phi(hi) < q) hi *= 2.0;
  for (int k = 0; k < 200; ++k) {
    const double mid = 0.5 * (lo + hi);
    (phi(mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Random admissible model with up to three phases per side.
inline lq::LevyModel random_model(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (;;) {
    lq::LevyModel m;
    m.drift = -2.0 + 3.0 * u(rng);
    m.gauss_var = u(rng) < 0.25 ? 0.0 : 0.1 + 1.9 * u(rng);
    for (lq::JumpSide* side : {&m.up, &m.down}) {
      const int phases = static_cast<int>(u(rng) * 4.0);
      if (phases == 0) continue;
      side->rate = 0.1 + 1.9 * u(rng);
      std::vector<double> w(phases), d(phases);
      double total = 0.0;
      for (int j = 0; j < phases; ++j) {
        w[j] = 0.05 + u(rng);
        total += w[j];
        d[j] = 0.5 + 4.5 * u(rng);
      }
      std::sort(d.begin(), d.end());
      bool distinct = true;
      for (int j = 1; j < phases; ++j) distinct = distinct && d[j] - d[j - 1] > 0.05;
      if (!distinct) continue;
      for (int j = 0; j < phases; ++j) side->phases.push_back({w[j] / total, d[j]});
      double sum = 0.0;
      for (int j = 0; j + 1 < phases; ++j) sum += side->phases[j].weight;
      side->phases.back().weight = 1.0 - sum;
    }
    if (lq::validate(m).ok()) return m;
  }
}

}  // namespace lqtest
