#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include <omp.h>

#include "doctest.h"
#include "tightlab/chaining.hpp"
#include "tightlab/error.hpp"

using namespace tightlab;

namespace {

const auto chi_gauss = LogMgfFunction::quadratic(0.5);

MetricSpace random_space(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> U(0.05, 1.0);
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = U(gen);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back("q" + std::to_string(i));
  return MetricSpace(labels, d);
}

// zeta_n(t) (or the increment zeta_n(t) - zeta_n(s), scaled) over `reps`
// disjoint blocks of copies, streamed without storing the ensemble.
RandomSample zeta_sample(const RandomFieldModel& model, std::size_t n, std::size_t reps, std::uint64_t seed,
                         std::size_t t, std::size_t s, double scale) {
  RandomSample out{{}, seed};
  std::vector<double> p(model.points());
  for (std::size_t r = 0; r < reps; ++r) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      model.sample_path(seed, r * n + i, p);
      acc += s == t ? p[t] : p[t] - p[s];
    }
    out.values.push_back(acc / std::sqrt(static_cast<double>(n)) / scale);
  }
  return out;
}

}  // namespace

TEST_CASE("natural distance: Brownian and Rademacher") {
  const auto mesh = interval_grid(9);
  const auto bm = RandomFieldModel::gaussian(brownian_covariance(mesh), 9);
  const auto d = natural_distance(bm, mesh, chi_gauss);
  for (std::size_t t = 0; t < 9; ++t) {
    CHECK(d(t, t) == 0.0);
    for (std::size_t s = 0; s < 9; ++s) CHECK(std::abs(d(t, s) - std::sqrt(mesh(t, s))) <= 1e-6 * std::max(1.0, d(t, s)));
  }
  const std::vector<double> a{0.2, -0.5, 0.8, 0.1};
  const auto rad = RandomFieldModel::rademacher_profile(a);
  const auto mesh4 = interval_grid(4);
  const auto dr = natural_distance(rad, mesh4, chi_gauss);
  for (std::size_t t = 0; t < 4; ++t)
    for (std::size_t s = 0; s < 4; ++s) CHECK(dr(t, s) == doctest::Approx(std::abs(a[t] - a[s])).epsilon(1e-6));
}

TEST_CASE("natural distance is order independent") {
  omp_set_num_threads(4);
  const auto mesh = interval_grid(7);
  const auto model = RandomFieldModel::gaussian(brownian_covariance(mesh), 7);
  const auto a = natural_distance(model, mesh, chi_gauss, {}, Exec::serial);
  const auto b = natural_distance(model, mesh, chi_gauss, {}, Exec::parallel);
  CHECK(std::equal(a.matrix().begin(), a.matrix().end(), b.matrix().begin()));
  const auto lux = natural_distance(model, mesh, OrliczGenerator::gauss2(), Exec::parallel);
  for (std::size_t t = 0; t < 7; ++t)
    for (std::size_t s = 0; s < 7; ++s)
      CHECK(lux(t, s) == doctest::Approx(std::sqrt(8.0 / 3.0) * std::sqrt(mesh(t, s))).epsilon(1e-5));
  // Shuffled evaluation: permuting the mesh permutes the matrix.
  std::vector<std::size_t> perm{3, 0, 6, 1, 5, 2, 4};
  std::vector<double> cov(49);
  const auto base = brownian_covariance(mesh);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) cov[i * 7 + j] = base[perm[i] * 7 + perm[j]];
  const auto pm = natural_distance(RandomFieldModel::gaussian(cov, 7), mesh.permuted(perm), chi_gauss);
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) CHECK(pm(i, j) == a(perm[i], perm[j]));
}

TEST_CASE("natural distance names the failing pair") {
  const auto t = RandomFieldModel::student_t_profile({1.0, 2.0}, 3.0);
  try {
    natural_distance(t, two_point_space(1.0), chi_gauss);
    FAIL("expected Infeasible");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Infeasible);
    CHECK(std::string(e.what()).find("(t1,t2)") != std::string::npos);
  }
}

TEST_CASE("sigma") {
  const auto unit = RandomFieldModel::gaussian(identity_covariance(4), 4);
  CHECK(sigma_of(unit, chi_gauss) == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sigma_of(unit.scaled(0.0), chi_gauss) == 0.0);
  CHECK(sigma_of(RandomFieldModel::rademacher_profile({0.1, -0.8, 0.5}), chi_gauss) ==
        doctest::Approx(0.8).epsilon(1e-6));
}

TEST_CASE("entropy integral examples") {
  const auto y = YoungPair::gaussian();
  const auto tp = two_point_space(0.7);
  const auto j = entropy_integral(tp, y, 1.0);
  CHECK(j.value == doctest::Approx(0.7 * std::sqrt(2 * std::log(3.0)) + 0.3 * std::sqrt(2 * std::log(2.0))).epsilon(1e-14));
  CHECK(j.jump_radii == std::vector<double>{0.7});
  MetricSpace flat({"a", "b", "c"}, std::vector<double>(9, 0.0));
  CHECK(entropy_integral(flat, y, 0.6).value == doctest::Approx(0.6 * y.inverse(1.0)).epsilon(1e-15));
}

TEST_CASE("entropy integral refinement on the Brownian metric") {
  const auto y = YoungPair::gaussian();
  std::vector<double> js;
  for (std::size_t m : {32u, 64u, 128u}) js.push_back(entropy_integral(brownian_grid(m), y, 1.0).value);
  CHECK(js[0] < js[1]);
  CHECK(js[1] < js[2]);
  CHECK((js[2] - js[1]) / js[1] < 1e-2);
}

TEST_CASE("piecewise additivity") {
  std::mt19937_64 gen(21);
  const auto y = YoungPair::gaussian();
  for (int trial = 0; trial < 20; ++trial) {
    const auto sm = random_space(gen, 9);
    const EntropyStepIntegral f(sm, y);
    const double sigma = 1.3;
    for (double cut : f.jump_radii()) {
      if (cut >= sigma) continue;
      const double split = f.between(0.0, cut) + f.between(cut, sigma);
      CHECK(split == doctest::Approx(f(sigma)).epsilon(1e-14));
      CHECK(f.between(0.0, cut) == f(cut));
    }
  }
}

TEST_CASE("chaining modulus") {
  const auto y = YoungPair::gaussian();
  const auto rho = chaining_modulus(two_point_space(0.7), y);
  CHECK(rho(0, 1) == doctest::Approx(0.7 * std::sqrt(2 * std::log(3.0))).epsilon(1e-15));
  CHECK(rho(0, 0) == 0.0);
  std::mt19937_64 gen(8);
  for (int trial = 0; trial < 20; ++trial) {
    const auto sm = random_space(gen, 10);
    MetricSpace r = chaining_modulus(sm, y);  // validated: semi-distance within tol
    const double sigma = diameter(sm);
    const double J = entropy_integral(sm, y, sigma).value;
    for (double v : r.matrix()) CHECK(v <= J + sigma * y.inverse(1.0));
  }
  // Continuity relative d: rho shrinks with d on a refining grid.
  const auto fine = chaining_modulus(brownian_grid(40), y);
  CHECK(fine(0, 1) < fine(0, 2));
  CHECK(fine(0, 1) < 0.5);
}

TEST_CASE("tail bound") {
  const auto q = Conjugate::quadratic(0.5);
  CHECK(tail_bound(1.0, 4, 1.0, q).value == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
  CHECK(tail_bound(2.0, 9, 0.5, q).value == doctest::Approx(0.011108996538242306).epsilon(1e-12));
  CHECK(tail_bound(0.0, 9, 1.0, q).value == 1.0);
  CHECK_THROWS_AS(tail_bound(1.0, 0, 1.0, q), Error);
  double prev = 2.0;
  for (double u = 0.0; u < 3.0; u += 0.1) {
    const double b = tail_bound(u, 4, 1.0, q).value;
    CHECK(b <= prev);
    CHECK(b >= 0.0);
    prev = b;
  }
  for (std::size_t n = 1; n < 50; ++n) CHECK(tail_bound(0.5, n + 1, 1.0, q).value <= tail_bound(0.5, n, 1.0, q).value);
  for (double c = 0.1; c < 3.0; c += 0.1) CHECK(tail_bound(0.5, 4, c + 0.1, q).value <= tail_bound(0.5, 4, c, q).value);
  const Conjugate numeric(LogMgfFunction::quadratic(0.5));
  CHECK(tail_bound(10.0, 100, 1.0, numeric).lower_flag);
}

TEST_CASE("calibration") {
  const auto q = Conjugate::quadratic(0.5);
  const std::vector<TailCell> zero{{1.0, 4, 0, 100, 0.0, 0.0}, {2.0, 9, 0, 100, 0.0, 0.0}};
  const auto a = calibrate_C(zero, q);
  CHECK(a.saturated);
  CHECK(a.C == 100.0);
  const std::vector<TailCell> one{{1.0, 4, 0, 0, std::exp(-2.0), 0.0}};
  const auto b = calibrate_C(one, q);
  CHECK_FALSE(b.saturated);
  CHECK(b.C == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(b.C <= 1.0);
  const std::vector<TailCell> hopeless{{1.0, 4, 10, 10, 1.0, 0.0}, {0.5, 4, 0, 10, 0.0, 0.0}};
  const auto c = calibrate_C(hopeless, q);
  CHECK(c.C == 1e-6);
  CHECK(c.violations == std::vector<std::size_t>{0});
}

TEST_CASE("uniform norm bounds on the two-point Rademacher field") {
  const auto model = RandomFieldModel::rademacher_profile({1.0, 0.3});
  const double sigma = sigma_of(model, chi_gauss);
  const double d = natural_distance(model, two_point_space(1.0), chi_gauss)(0, 1);
  CHECK(d == doctest::Approx(0.7).epsilon(1e-6));
  // Near lambda = 0 the sample mean dominates the empirical log-MGF; test away from it.
  NormOptions opt;
  for (double l = 0.5; l <= 2.0 + 1e-12; l += 0.25) opt.lambda_grid.insert(opt.lambda_grid.end(), {l, -l});
  const std::size_t reps = 100000;
  double c3 = 0.0;
  for (std::size_t n : {1u, 4u, 16u, 64u}) {
    const double z = bchi_norm(zeta_sample(model, n, reps, 1000 + n, 0, 0, 1.0), chi_gauss, opt).value;
    CHECK(z <= sigma * 1.05);
    c3 = std::max(c3, bchi_norm(zeta_sample(model, n, reps, 1000 + n, 0, 1, d), chi_gauss, opt).value);
  }
  CHECK(c3 <= 1.05);
  CHECK(c3 > 0.5);
}
