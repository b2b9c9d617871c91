#include <cmath>
#include <random>
#include <thread>

#include "doctest.h"
#include "lqueue/errors.hpp"
#include "lqueue/wiener_hopf.hpp"
#include "support.hpp"

using namespace lq;
using lqtest::cplx;

namespace {

// Spectrally negative counterpart of a spectrally positive model.
LevyModel negated(const LevyModel& m) {
  LevyModel r = m;
  r.drift = -m.drift;
  std::swap(r.up, r.down);
  return r;
}

std::size_t expected_roots(const LevyModel& m, Side side) {
  const JumpSide& jumps = side == Side::ascending ? m.up : m.down;
  const bool creeps = m.gauss_var > 0.0 || (side == Side::ascending ? m.drift > 0.0 : m.drift < 0.0);
  return jumps.phases.size() + (creeps ? 1 : 0);
}

}  // namespace

TEST_CASE("Brownian roots") {
  for (double q : {0.0, 0.3, 1.0, 7.5}) {
    const auto r = characteristic_roots(lqtest::bm_model(), q);
    REQUIRE(r.ascending.size() == 1);
    REQUIRE(r.descending.size() == 1);
    CHECK(r.ascending[0].real() == doctest::Approx(lqtest::bm_ascending_root(-1, 1, q)).epsilon(1e-13));
    CHECK(std::abs(r.descending[0] - lqtest::bm_descending_root(-1, 1, q)) < 1e-13);
    CHECK(r.leading == doctest::Approx(0.5));
  }
}

TEST_CASE("one-sided roots at q = 1") {
  const auto sp = characteristic_roots(lqtest::spos_model(), 1.0);
  REQUIRE(sp.ascending.size() == 1);
  REQUIRE(sp.descending.size() == 1);
  CHECK(sp.ascending[0].real() == doctest::Approx((-0.5 + std::sqrt(4.25)) / 2).epsilon(1e-13));
  CHECK(sp.descending[0].real() == doctest::Approx(lqtest::phi_inverse(negated(lqtest::spos_model()), 1.0)).epsilon(1e-12));

  const auto sn = characteristic_roots(lqtest::sneg_model(), 1.0);
  REQUIRE(sn.ascending.size() == 1);
  CHECK(sn.ascending[0].real() == doctest::Approx(lqtest::phi_inverse(lqtest::sneg_model(), 1.0)).epsilon(1e-12));
  CHECK(sn.descending.size() == 2);
}

TEST_CASE("root counts and half planes on random models") {
  std::mt19937_64 rng(11);
  for (int k = 0; k < 120; ++k) {
    const LevyModel m = lqtest::random_model(rng);
    for (double q : {0.0, 0.05, 1.0, 20.0}) {
      const auto r = characteristic_roots(m, q);
      CHECK(r.ascending.size() == expected_roots(m, Side::ascending));
      CHECK(r.descending.size() == expected_roots(m, Side::descending));
      for (const auto& z : r.ascending) CHECK(z.real() > 0.0);
      std::size_t at_origin = 0;
      for (const auto& z : r.descending) {
        CHECK(z.real() >= 0.0);
        if (std::abs(z) < 1e-10) ++at_origin;
      }
      CHECK(at_origin == (q == 0.0 ? 1u : 0u));
    }
  }
}

TEST_CASE("product and factor identities") {
  std::mt19937_64 rng(12);
  std::vector<LevyModel> models = {lqtest::bm_model(), lqtest::spos_model(), lqtest::sneg_model(),
                                   lqtest::two_sided_model()};
  for (int k = 0; k < 20; ++k) models.push_back(lqtest::random_model(rng));
  for (const auto& m : models) {
    const LadderExponents lx(m);
    for (double q : {0.5, 1.0, 2.0}) {
      const cplx prod = lx.kappa(Side::ascending, q, 0.0) * lx.kappa(Side::descending, q, 0.0);
      CHECK(std::abs(prod - q) < 1e-10 * q);
      for (double beta = -10.0; beta <= 10.0; beta += 0.625) {
        const cplx lhs = q - lqtest::psi(m, beta);
        const cplx rhs = lx.kappa(Side::descending, q, cplx(0.0, beta)) * lx.kappa(Side::ascending, q, cplx(0.0, -beta));
        CHECK(std::abs(lhs - rhs) <= 1e-10 * std::abs(lhs));
      }
      CHECK(lx.at(q)->residual < 1e-10);
    }
  }
}

TEST_CASE("Brownian ladder exponents at q = 1") {
  const LadderExponents lx(lqtest::bm_model());
  CHECK(lx.kappa(Side::ascending, 1.0, 0.0).real() == doctest::Approx(std::sqrt(0.5) * (1 + std::sqrt(3.0))));
  const cplx ratio = lx.kappa(Side::ascending, 1.0, 0.0) / lx.kappa(Side::ascending, 1.0, 1.0);
  CHECK(ratio.real() == doctest::Approx(0.7320508075688772).epsilon(1e-14));
  CHECK(std::abs(lx.kappa(Side::descending, 0.0, 0.0)) < 1e-14);
}

TEST_CASE("supremum laws at q = 0") {
  const LadderExponents bm(lqtest::bm_model());
  const LadderExponents sp(lqtest::spos_model());
  for (double theta : {0.0, 0.5, 1.0, 4.0}) {
    const cplx b = bm.kappa(Side::ascending, 0.0, 0.0) / bm.kappa(Side::ascending, 0.0, theta);
    CHECK(b.real() == doctest::Approx(2.0 / (2.0 + theta)).epsilon(1e-13));
    const cplx s = sp.kappa(Side::ascending, 0.0, 0.0) / sp.kappa(Side::ascending, 0.0, theta);
    CHECK(s.real() == doctest::Approx(0.5 * (theta + 1.0) / (theta + 0.5)).epsilon(1e-13));
  }
}

TEST_CASE("q-derivative of the exponents") {
  const LadderExponents bm(lqtest::bm_model());
  CHECK(bm.kappa_dq0(0.0) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-8));
  CHECK(bm.kappa_dq(Side::ascending, 1.0, 2.0) == doctest::Approx(std::sqrt(0.5) / std::sqrt(3.0)).epsilon(1e-8));

  // Descending root of the spectrally positive model is a bisection inverse.
  const LevyModel sp = lqtest::spos_model();
  const LadderExponents lx(sp);
  for (double q : {0.25, 1.0, 3.0}) {
    const double h = 1e-5;
    const LevyModel neg = negated(sp);
    const double root = lqtest::phi_inverse(neg, q);
    const double slope = (lqtest::phi_inverse(neg, q + h) - lqtest::phi_inverse(neg, q - h)) / (2 * h);
    const double rel = lx.kappa_dq(Side::descending, q, 0.0) / lx.kappa(Side::descending, q, 0.0).real();
    CHECK(rel == doctest::Approx(slope / root).epsilon(1e-6));
  }

  std::mt19937_64 rng(13);
  for (int k = 0; k < 30; ++k) {
    const LadderExponents r(lqtest::random_model(rng));
    CHECK(r.kappa_dq0(0.0) >= 0.0);
  }
}

TEST_CASE("exponents are continuous at q = 0") {
  std::mt19937_64 rng(14);
  for (int k = 0; k < 20; ++k) {
    const LadderExponents lx(lqtest::random_model(rng));
    for (double theta : {0.0, 0.7, 3.0}) {
      const cplx a0 = lx.kappa(Side::ascending, 0.0, theta), a1 = lx.kappa(Side::ascending, 1e-8, theta);
      const double slope = std::abs(lx.kappa_dq_analytic(Side::ascending, 0.0, theta));
      CHECK(std::abs(a1 - a0) <= 2e-8 * slope + 1e-14 * std::abs(a0));
    }
  }
}

TEST_CASE("gauge scale only moves the constants") {
  const LevyModel m = lqtest::two_sided_model();
  const LadderExponents a(m), b(m, 10.0);
  CHECK(b.kappa(Side::ascending, 1.0, 0.5).real() == doctest::Approx(10.0 * a.kappa(Side::ascending, 1.0, 0.5).real()));
  CHECK(b.kappa(Side::descending, 1.0, 0.5).real() == doctest::Approx(0.1 * a.kappa(Side::descending, 1.0, 0.5).real()));
  CHECK_THROWS_AS(LadderExponents(m, 0.0), Error);
}

TEST_CASE("factorization cache under concurrent lookups") {
  const LadderExponents lx(lqtest::two_sided_model());
  CHECK(lx.cache_size() == 0);
  lx.at(1.0);
  lx.at(1.0);
  CHECK(lx.cache_size() == 1);

  std::vector<double> got(8);
  {
    std::vector<std::jthread> pool;
    for (int t = 0; t < 8; ++t)
      pool.emplace_back([&, t] { got[t] = lx.kappa(Side::ascending, 0.5 + (t % 4), 1.0).real(); });
  }
  CHECK(lx.cache_size() == 5);
  for (int t = 0; t < 8; ++t) CHECK(got[t] == lx.kappa(Side::ascending, 0.5 + (t % 4), 1.0).real());
}

TEST_CASE("invalid input is refused") {
  CHECK_THROWS_AS(factorize(lqtest::bm_model(), -1.0), Error);
  LevyModel up;
  up.drift = 1.0;
  up.gauss_var = 1.0;
  try {
    LadderExponents lx(up);
    FAIL("expected invalid model");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::invalid_model);
  }
  const LadderExponents lx(lqtest::bm_model());
  CHECK_THROWS_AS(lx.kappa(Side::ascending, 1.0, cplx(-1.0, 0.0)), Error);
}

TEST_CASE("describe lists every field") {
  const std::string text = describe(factorize(lqtest::two_sided_model(), 1.0));
  for (const char* key : {"q", "leading", "ascending.gauge", "ascending.roots", "ascending.poles", "descending.gauge",
                          "descending.roots", "descending.poles", "product_residual", "identity_residual"})
    CHECK(text.find(std::string(key) + " = ") != std::string::npos);
}
