#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "tightlab/holder.hpp"

using namespace tightlab;

namespace {

std::vector<double> random_path(std::mt19937_64& gen, std::size_t n) {
  std::normal_distribution<double> N;
  std::vector<double> f(n);
  for (auto& v : f) v = N(gen);
  return f;
}

}  // namespace

TEST_CASE("identity path") {
  // Dyadic spacing keeps every increment exact.
  const HolderModulus dy{interval_grid(17), 0};
  std::vector<double> t17;
  for (std::size_t k = 0; k <= 16; ++k) t17.push_back(static_cast<double>(k) / 16.0);
  CHECK(holder_norm(t17, dy).value == 1.0);
  const HolderModulus hm{interval_grid(11), 0};
  std::vector<double> f;
  for (std::size_t k = 0; k <= 10; ++k) f.push_back(static_cast<double>(k) / 10.0);
  const auto h = holder_norm(f, hm);
  CHECK_FALSE(h.infinite);
  CHECK(h.value == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_FALSE(ball_membership(f, hm, 0.99));
  CHECK(ball_membership(f, hm, 1.01));
}

TEST_CASE("constant and sqrt paths") {
  const HolderModulus hm{interval_grid(11), 3};
  const std::vector<double> c(11, -2.5);
  CHECK(holder_norm(c, hm).value == 2.5);
  const HolderModulus bm{brownian_grid(17), 0};
  std::vector<double> f;
  for (std::size_t k = 0; k <= 16; ++k) f.push_back(std::sqrt(static_cast<double>(k) / 16.0));
  CHECK(holder_norm(f, bm).value == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("semi-distance zeros") {
  MetricSpace sm({"a", "b", "c"}, {0, 0, 1, 0, 0, 1, 1, 1, 0});
  const HolderModulus hm{sm, 0};
  const std::vector<double> same{1.0, 1.0, 3.0};
  CHECK(holder_norm(same, hm).value == 3.0);
  const std::vector<double> split{1.0, 2.0, 3.0};
  CHECK(holder_norm(split, hm).infinite);
  CHECK_FALSE(ball_membership(split, hm, 1e300));
}

TEST_CASE("homogeneity, triangle, modulus monotonicity, sup domination") {
  std::mt19937_64 gen(5);
  const auto bm = brownian_grid(12);
  const HolderModulus hm{bm, 4};
  std::vector<double> twice(bm.matrix().begin(), bm.matrix().end());
  for (auto& v : twice) v *= 2.0;
  const HolderModulus wide{bm.with_distances(twice), 4};
  for (int trial = 0; trial < 100; ++trial) {
    const auto f = random_path(gen, 12), g = random_path(gen, 12);
    const double nf = holder_norm(f, hm).value;
    for (double c : {-4.0, 0.5, 8.0}) {
      auto cf = f;
      for (auto& v : cf) v *= c;
      CHECK(holder_norm(cf, hm).value == std::abs(c) * nf);
    }
    auto sum = f;
    for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += g[i];
    CHECK(holder_norm(sum, hm).value <= nf + holder_norm(g, hm).value + 1e-12);
    CHECK(holder_norm(f, wide).value <= nf);
    double sup = 0.0, reach = 0.0;
    for (std::size_t t = 0; t < f.size(); ++t) {
      sup = std::max(sup, std::abs(f[t]));
      reach = std::max(reach, bm(4, t));
    }
    CHECK(sup <= nf * (1.0 + reach) + 1e-12);
  }
}

TEST_CASE("modulus_from keeps the matrix and base point") {
  const auto tp = two_point_space(0.7);
  const auto a = modulus_from(ModulusRoute::chaining, tp);
  CHECK(a.base_point == 0);
  CHECK(a.omega(0, 1) == 0.7);
  const auto b = modulus_from(ModulusRoute::majorizing, tp, 1);
  CHECK(b.base_point == 1);
  CHECK_THROWS(modulus_from(ModulusRoute::majorizing, tp, 2));
}
