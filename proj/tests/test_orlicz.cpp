#include <cmath>
#include <random>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "doctest.h"
#include "tightlab/error.hpp"
#include "tightlab/orlicz.hpp"

using namespace tightlab;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::InvalidArgument;
}

}  // namespace

TEST_CASE("phi of gaussian and rademacher laws") {
  const std::vector<ScalarLaw> unit(5, ScalarLaw::gaussian(1.0));
  const auto phi = phi_of(unit);
  for (double l : phi.grid()) CHECK(std::abs(phi(l) - 0.5 * l * l) <= 1e-12);
  CHECK(phi(0.0) == 0.0);
  const std::vector<ScalarLaw> rad{ScalarLaw::rademacher(0.5), ScalarLaw::rademacher(1.0),
                                   ScalarLaw::rademacher(-0.3)};
  const auto pr = phi_of(rad);
  for (double l : pr.grid()) CHECK(pr(l) == doctest::Approx(std::log(std::cosh(l))).epsilon(1e-12));
}

TEST_CASE("empirical phi") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> N(0.0, 1.0);
  const std::size_t draws = 20000, points = 3;
  std::vector<double> d(draws * points);
  for (auto& x : d) x = N(gen);
  const auto phi = phi_of_samples(d, points, symmetric_grid(1.0, 21));
  CHECK(phi.sample_size() == draws);
  CHECK(phi(1.0) == doctest::Approx(0.5).epsilon(0.1));
  for (auto& x : d) x += 1.0;
  CHECK(kind_of([&] { phi_of_samples(d, points, symmetric_grid(1.0, 21)); }) == ErrorKind::NonCentered);
  std::vector<double> heavy(2000);
  std::student_t_distribution<double> T(1.2);
  for (auto& x : heavy) x = T(gen);
  heavy[0] = 1e6;
  heavy[1] = -1e6;
  CHECK(kind_of([&] { phi_of_samples(heavy, 1, symmetric_grid(4.0, 21)); }) == ErrorKind::MgfDiverged);
}

TEST_CASE("envelope constants") {
  const auto g = envelope_constants(LogMgfFunction::gaussian(1.0));
  CHECK(g.c1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(g.c2 == doctest::Approx(0.5).epsilon(1e-12));
  const auto r = envelope_constants(LogMgfFunction::rademacher(1.0));
  CHECK(r.c1 == doctest::Approx(std::log(std::cosh(1.0))).epsilon(1e-12));
  CHECK(r.c2 == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(r.c2 <= 0.5);
  const auto grid = symmetric_grid();
  CHECK(kind_of([&] { envelope_constants(LogMgfFunction::tabulated(grid, std::vector<double>(grid.size(), 0.0))); }) ==
        ErrorKind::EnvelopeViolated);
}

TEST_CASE("grid validation") {
  auto grid = symmetric_grid(1.0, 5);
  CHECK_THROWS_AS(LogMgfFunction::tabulated(grid, {1, 0.2, 0, 0.2, 1.1}), Error);  // odd part
  CHECK_THROWS_AS(LogMgfFunction::tabulated(grid, {1, 0.2, 0.1, 0.2, 1}), Error);  // nonzero at 0
  CHECK_THROWS_AS(LogMgfFunction::tabulated(grid, {1, 0.9, 0, 0.9, 1}), Error);    // concave
  CHECK_THROWS_AS(LogMgfFunction::tabulated({-1, 0, 1}, {1, 0, 1}), Error);         // too few nodes
}

TEST_CASE("chi of gaussian and rademacher") {
  const auto phi = LogMgfFunction::gaussian(1.0);
  for (double l : {0.5, 1.0, 2.5, 4.0}) CHECK(std::abs(chi_of(phi, l).value - 0.5 * l * l) <= 1e-9);
  CHECK(chi_of(phi, 0.0).value == 0.0);
  const auto rad = LogMgfFunction::rademacher(1.0);
  for (double l : {0.5, 1.0, 2.0, 4.0}) {
    const auto c = chi_of(rad, l);
    CHECK(c.value == doctest::Approx(0.5 * l * l).epsilon(1e-9));
    CHECK(c.value >= rad(l));
  }
  CHECK(chi_of(rad, 2.0).argmax_n == 0);
  // n * log cosh(l / sqrt n) increases to l^2/2: check the 10^6 term directly.
  const double n = 1e6, l = 3.0;
  CHECK(n * log_cosh(l / std::sqrt(n)) < 4.5);
  CHECK(n * log_cosh(l / std::sqrt(n)) == doctest::Approx(4.5 - std::pow(l, 4) / (12 * n)).epsilon(1e-9));
}

TEST_CASE("chi dominates phi, envelope ordering") {
  const auto rad = LogMgfFunction::rademacher(0.8);
  const auto chi = chi_function(rad);
  for (double l : rad.grid()) CHECK(chi(l) >= rad(l) - 1e-12);
  const auto ep = envelope_constants(rad);
  const auto tab = [&] {
    std::vector<double> v;
    for (double l : rad.grid()) v.push_back(chi_of(rad, l).value);
    return LogMgfFunction::tabulated(rad.grid(), v);
  }();
  CHECK(envelope_constants(tab).c1 >= ep.c1);
}

TEST_CASE("chi of a coarse table") {
  auto grid = symmetric_grid(4.0, 9);
  std::vector<double> v;
  for (double l : grid) v.push_back(std::log(std::cosh(l)));
  const auto coarse = LogMgfFunction::tabulated(grid, v);
  CHECK(kind_of([&] { chi_of(coarse, 1.0); }) == ErrorKind::GridTooCoarse);
}

TEST_CASE("legendre examples") {
  const auto q = LogMgfFunction::quadratic(0.5);
  CHECK(legendre(q, 3.0).value == doctest::Approx(4.5).epsilon(1e-9));
  CHECK(legendre(q, 0.0).value == 0.0);
  std::vector<double> v;
  for (double l : symmetric_grid()) v.push_back(0.5 * l * l);
  const auto trunc = LogMgfFunction::tabulated(symmetric_grid(), v);
  const auto r = legendre(trunc, 1.0);
  CHECK(r.value == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.argmax == doctest::Approx(1.0).epsilon(1e-6));
  CHECK_FALSE(r.lower_bound);
  CHECK(legendre(trunc, 10.0).lower_bound);
}

TEST_CASE("conjugate duality and Fenchel-Young") {
  const auto grid = symmetric_grid(10.0, 401);
  for (double c : {0.25, 0.5, 1.0, 2.0}) {
    const auto f = LogMgfFunction::quadratic(c, grid);
    for (double x = 0.0; x <= 4.0 + 1e-12; x += 0.05) {
      CHECK(std::abs(legendre(f, x).value - x * x / (4 * c)) <= 1e-6);
      for (double l : grid) CHECK(l * x <= f(l) + legendre(f, x).value + 1e-8);
    }
  }
}

TEST_CASE("young pair") {
  const auto y = YoungPair::gaussian();
  CHECK(y.inverse(0.0) == 0.0);
  CHECK(y.inverse(3.0) == doctest::Approx(std::sqrt(2 * std::log(4.0))).epsilon(1e-12));
  const YoungPair numeric([](double z) { return 0.5 * z * z; }, 6.0);
  CHECK(numeric.inverse(3.0) == doctest::Approx(1.6651092223153954).epsilon(1e-9));
  for (double u : {0.1, 1.0, 3.0, 100.0}) CHECK(std::abs(numeric.forward(numeric.inverse(u)) - u) <= 1e-9 * (1 + u));
  for (double z = 0.0; z <= 6.0; z += 0.1) CHECK(std::abs(numeric.inverse(numeric.forward(z)) - z) <= 1e-8);
  CHECK(kind_of([] { YoungPair([](double) { return 1.0; }, 2.0); }) == ErrorKind::NotMonotone);
  const auto via = YoungPair::from_conjugate(Conjugate(LogMgfFunction::quadratic(0.5)), 3.0);
  CHECK(via.inverse(3.0) == doctest::Approx(std::sqrt(2 * std::log(4.0))).epsilon(1e-6));
}

TEST_CASE("bchi norm") {
  const auto chi = LogMgfFunction::quadratic(0.5);
  CHECK(bchi_norm(ScalarLaw::gaussian(1.0), chi).value == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(bchi_norm(ScalarLaw::gaussian(2.0), chi).value == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(bchi_norm(ScalarLaw::zero(), chi).value == 0.0);
  CHECK(bchi_norm(ScalarLaw::rademacher(0.7), chi).value == doctest::Approx(0.7).epsilon(1e-6));
  for (double a : {0.3, 1.7, 5.0}) {
    const double base = bchi_norm(ScalarLaw::gaussian(1.0), chi).value;
    CHECK(bchi_norm(ScalarLaw::gaussian(a), chi).value == doctest::Approx(a * base).epsilon(2e-6));
  }
  CHECK(kind_of([&] { bchi_norm(ScalarLaw::student_t(1.0, 3.0), chi); }) == ErrorKind::Infeasible);
  RandomSample s{{1.0, -1.0, 1.0, -1.0}, 0};
  const auto r = bchi_norm(s, chi);
  // Sample mode tests only the grid: the binding node is the smallest positive lambda.
  const double lmin = symmetric_grid()[101];
  CHECK(r.value == doctest::Approx(std::sqrt(2 * std::log(std::cosh(lmin))) / lmin).epsilon(1e-6));
  CHECK(r.sample_size == 4);
}

TEST_CASE("generators") {
  const auto g = OrliczGenerator::gauss2();
  CHECK_NOTHROW(g.validate());
  CHECK(g(1.0) == doctest::Approx(std::exp(1.0) - 1));
  CHECK(kind_of([] { OrliczGenerator::from_name("exp"); }) == ErrorKind::InvalidGenerator);
  CHECK_NOTHROW(OrliczGenerator::from_name("power-exp", 1.5));
  CHECK(kind_of([] { OrliczGenerator::from_name("nope"); }) == ErrorKind::InvalidGenerator);
}

TEST_CASE("luxemburg norm") {
  const auto g = OrliczGenerator::gauss2();
  CHECK(luxemburg_norm(RandomSample{{0.0, 0.0}, 0}, g) == 0.0);
  CHECK(luxemburg_norm(RandomSample{{2.5}, 0}, g) == doctest::Approx(2.5 / std::sqrt(std::log(2.0))).epsilon(1e-6));
  CHECK(luxemburg_norm(RandomSample{{1.0, -1.0}, 0}, g) == doctest::Approx(1.2011224087864498).epsilon(1e-6));
  // Unit Gaussian: E exp(g^2/tau^2) = (1 - 2/tau^2)^{-1/2} = 2 at tau^2 = 8/3.
  CHECK(luxemburg_norm(ScalarLaw::gaussian(1.0), g) == doctest::Approx(std::sqrt(8.0 / 3.0)).epsilon(1e-5));
  CHECK(luxemburg_norm(ScalarLaw::zero(), g) == 0.0);
  CHECK(luxemburg_norm(ScalarLaw::rademacher(1.0), g) == doctest::Approx(1.0 / std::sqrt(std::log(2.0))).epsilon(1e-6));
  CHECK(std::isinf(luxemburg_norm(ScalarLaw::student_t(1.0, 4.0), g)));
}

TEST_CASE("orlicz mean against quadrature") {
  const auto g = OrliczGenerator::gauss2();
  const double tau = 2.0;
  auto f = [&](double x) { return std::exp(-0.5 * x * x) / std::sqrt(2 * M_PI) * std::expm1(x * x / (tau * tau)); };
  const double direct = 2.0 * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, 0.0, 40.0);
  CHECK(ScalarLaw::gaussian(1.0).orlicz_mean(g, tau) == doctest::Approx(direct).epsilon(1e-9));
  CHECK(ScalarLaw::gaussian(1.0).orlicz_mean(g, tau) == doctest::Approx(1.0 / std::sqrt(1 - 2 / (tau * tau)) - 1).epsilon(1e-9));
}
