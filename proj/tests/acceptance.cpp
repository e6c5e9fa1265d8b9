#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tightlab/chaining.hpp"
#include "tightlab/error.hpp"
#include "tightlab/field_lab.hpp"
#include "tightlab/holder.hpp"
#include "tightlab/majorizing.hpp"
#include "tightlab/metric_space.hpp"
#include "tightlab/orlicz.hpp"
#include "tightlab/report.hpp"
#include "tightlab/scenario.hpp"

using namespace tightlab;
namespace fs = std::filesystem;

namespace {

const fs::path kSource = TIGHTLAB_SOURCE_DIR;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// P(|2K - n| / n > level), K ~ Binomial(n, 1/2).
double mean_sign_tail(std::size_t n, double level) {
  double p = 0.0;
  for (std::size_t k = 0; k <= n; ++k) {
    const double s = std::abs(2.0 * static_cast<double>(k) - static_cast<double>(n)) / static_cast<double>(n);
    if (s > level)
      p += std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0) - n * std::log(2.0));
  }
  return p;
}

MetricSpace random_semimetric(std::size_t n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(0.05, 1.0);
  std::bernoulli_distribution zero(0.1);
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = zero(rng) ? 0.0 : w(rng);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] = std::min(d[i * n + j], d[i * n + k] + d[k * n + j]);
  std::vector<std::string> labels;
  for (std::size_t i = 0; i < n; ++i) labels.push_back("p" + std::to_string(i));
  return MetricSpace(labels, d);
}

Outcome gaussian_identity() {
  const auto grid = symmetric_grid();
  const std::vector<ScalarLaw> laws{ScalarLaw::gaussian(1.0)};
  const auto phi = phi_of(laws, grid);
  const auto chi = chi_function(phi);
  double err = 0.0;
  for (double l : grid) {
    err = std::max(err, std::abs(phi(l) - 0.5 * l * l));
    err = std::max(err, std::abs(chi(l) - 0.5 * l * l));
  }
  const auto model = RandomFieldModel::gaussian({1.0}, 1);
  const double sigma = sigma_of(model, chi);
  return {err <= 1e-9 && std::abs(sigma - 1.0) <= 1e-6, fmt("max |phi,chi - l^2/2| = %.2e, sigma = %.9f", err, sigma)};
}

Outcome conjugacy() {
  const auto grid = symmetric_grid(10.0, 401);
  double err = 0.0, fy = 0.0;
  for (double c : {0.25, 0.5, 1.0, 2.0}) {
    const auto f = LogMgfFunction::quadratic(c, grid);
    for (int i = 0; i <= 400; ++i) {
      const double x = 4.0 * i / 400.0;
      const auto v = legendre(f, x);
      err = std::max(err, std::abs(v.value - x * x / (4 * c)));
      for (double l : grid) fy = std::max(fy, l * x - f(l) - v.value);
    }
  }
  return {err <= 1e-6 && fy <= 1e-8, fmt("max legendre error %.2e, max Fenchel-Young excess %.2e", err, fy)};
}

Outcome covering() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(8, 12);
  std::size_t bad = 0, checks = 0;
  for (int s = 0; s < 50; ++s) {
    const auto sm = random_semimetric(size(rng), rng);
    auto eps = distinct_distances(sm);
    eps.push_back(eps.empty() ? 1.0 : eps.back() * 2);
    for (double e : eps) {
      ++checks;
      if (covering_number(sm, e, {CoverMode::greedy}) < covering_number(sm, e, {CoverMode::exact})) ++bad;
    }
  }
  const std::size_t n = covering_number(interval_grid(11), 0.15, {CoverMode::exact});
  return {bad == 0 && n == 4, fmt("greedy < exact in %zu of %zu checks; interval(11), eps 0.15: N = %zu", bad, checks, n)};
}

Outcome entropy_convergence() {
  const auto young = YoungPair::gaussian();
  std::vector<double> J;
  for (std::size_t m : {32, 64, 128})
    J.push_back(entropy_integral(brownian_grid(m), young, 1.0, {CoverMode::automatic}).value);
  const double rel = (J[2] - J[1]) / J[2];
  const bool inc = J[0] < J[1] && J[1] < J[2];
  return {inc && std::abs(rel) < 1e-2, fmt("J(32,64,128) = %.6f, %.6f, %.6f; rel change 64->128 = %.2e", J[0], J[1], J[2], rel)};
}

Outcome exact_oracle() {
  const auto model = RandomFieldModel::rademacher_profile({1.0, 0.3});
  const auto rho = two_point_space(0.7);
  const std::vector<double> u{0.15, 0.35, 0.55};
  const std::vector<std::size_t> ns{4, 7, 10, 12};
  const std::size_t reps = 10000;
  double worst = 0.0;
  std::size_t cells = 0;
  auto check = [&](double p_hat, double p) {
    const double se = std::sqrt(p * (1 - p) / reps);
    const double z = se > 0 ? std::abs(p_hat - p) / se : (p_hat == p ? 0.0 : INFINITY);
    worst = std::max(worst, z);
    ++cells;
  };
  for (const auto& c : mc_tail_table(model, rho, u, ns, reps, 101)) check(c.p, mean_sign_tail(c.n, c.u));
  ExitSpec es;
  es.radii = {0.15, 0.35, 0.55};
  for (const auto& c : etc_rate_estimate(model, es, ns, reps, 202).cells) check(c.p, mean_sign_tail(c.n, c.radius));
  return {worst <= 3.0, fmt("%zu cells, worst |MC - exact| = %.2f binomial stderr", cells, worst)};
}

Outcome bound_domination() {
  std::ostringstream d;
  bool ok = true;
  for (const char* name : {"gauss-bm-32", "rademacher-16"}) {
    std::vector<double> Cs[2];
    for (std::uint64_t seed : {1u, 2u}) {
      Overrides ov;
      ov.seed = seed;
      const auto sc = parse_scenario(kSource / "scenarios" / (std::string(name) + ".toml"), ov);
      const auto r = run(Command::verify, sc);
      ok &= r.exit_code == kOk;
      int k = 0;
      for (const char* route : {"entropy", "majorizing"}) {
        const auto& mc = r.json[route]["mc"];
        for (const auto& b : mc["bounds"])
          ok &= b["bound"].get<double>() >= b["empirical"].get<double>() - 2 * b["stderr"].get<double>();
        Cs[k++].push_back(mc["calibration"]["C"].get<double>());
      }
    }
    d << name << ":";
    for (int k = 0; k < 2; ++k) {
      const double spread = std::abs(Cs[k][0] - Cs[k][1]) / std::min(Cs[k][0], Cs[k][1]);
      ok &= spread <= 0.10;
      d << fmt(" C%s = %.4g/%.4g", k == 0 ? "_ent" : "_maj", Cs[k][0], Cs[k][1]);
    }
    d << "; ";
  }
  return {ok, d.str() + "every cell dominated"};
}

Outcome etc_rate() {
  const double c = 0.5;
  const double I = 0.5 * (1.5 * std::log(1.5) + 0.5 * std::log(0.5));
  std::vector<double> rates;
  for (std::size_t n : {20, 40, 80, 160, 320, 640}) rates.push_back(-std::log(mean_sign_tail(n, c)) / static_cast<double>(n));
  bool monotone = true;
  for (std::size_t i = 1; i < rates.size(); ++i)
    monotone &= std::abs(rates[i] - I) <= std::abs(rates[i - 1] - I) && (rates[i] - I) * (rates[0] - I) > 0;
  const auto model = RandomFieldModel::rademacher_profile({1.0, 1.0});
  ExitSpec es;
  es.radii = {c};
  const std::vector<std::size_t> n80{80};
  const auto cell = etc_rate_estimate(model, es, n80, 8'000'000, 77).cells.at(0);
  const double rel = std::abs(cell.rate - rates[2]) / rates[2];
  return {monotone && !cell.censored && rel <= 0.10,
          fmt("exact rates n=20..640: %.4f %.4f %.4f %.4f %.4f %.4f -> I = %.4f; MC at n=80: %.4f (%llu exits), rel err %.3f",
              rates[0], rates[1], rates[2], rates[3], rates[4], rates[5], I, cell.rate,
              static_cast<unsigned long long>(cell.exits), rel)};
}

Outcome w_suite() {
  const auto phi = OrliczGenerator::gauss2();
  const auto two = two_point_space(0.7);
  const double w = w_distance(two, PointMeasure::uniform(2), phi, 0, 1, 1.0);
  const double expect = 6 * 0.7 * 2 * std::sqrt(std::log(17.0));
  bool ok = std::abs(w - expect) <= 1e-9;

  std::mt19937_64 rng(8);
  const auto five = random_semimetric(5, rng);
  const auto m5 = PointMeasure::uniform(5);
  bool sym = true;
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) sym &= w_distance(five, m5, phi, i, j, 1.0) == w_distance(five, m5, phi, j, i, 1.0);

  const auto four = random_semimetric(4, rng);
  const auto m4 = PointMeasure({0.1, 0.2, 0.3, 0.4});
  bool mono = true;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double prev = -1.0;
      for (double V : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double v = w_distance(four, m4, phi, i, j, V);
        mono &= v >= prev;
        prev = v;
      }
    }

  const MetricSpace iso({"a", "b", "z"}, {0, 1, 5, 1, 0, 5, 5, 5, 0});
  const PointMeasure mz({0.5, 0.5, 0.0});
  bool infinite = false;
  try {
    w_distance(iso, mz, phi, 0, 2, 1.0);
  } catch (const Error& e) {
    infinite = e.kind() == ErrorKind::InfiniteW;
  }
  const auto cls = classify_measure(mz, iso, phi);
  ok &= sym && mono && infinite && cls.cls == MeasureClass::neither;
  return {ok, fmt("two-point w = %.12f (expect %.12f); symmetric %d; V-monotone %d; isolated zero mass: InfiniteW %d, class %s",
                  w, expect, sym, mono, infinite, to_string(cls.cls))};
}

Outcome holder_suite() {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  const auto omega = random_semimetric(10, rng);
  std::vector<double> off(100);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t j = 0; j < 10; ++j) off[i * 10 + j] = omega(i, j) + (i == j ? 0.0 : 0.25);
  const HolderModulus h1{omega, 0}, h2{omega.with_distances(off), 0};
  bool homog = true, tri = true, mono = true;
  const double scales[] = {-4.0, -0.5, 0.25, 2.0, 8.0};
  for (int k = 0; k < 100; ++k) {
    std::vector<double> f(10), gg(10), fg(10), cf(10);
    for (std::size_t i = 0; i < 10; ++i) {
      // Zero-omega pairs carry equal values so the norms stay finite.
      f[i] = g(rng);
      gg[i] = g(rng);
    }
    for (std::size_t i = 0; i < 10; ++i)
      for (std::size_t j = 0; j < i; ++j)
        if (omega(i, j) == 0.0) {
          f[i] = f[j];
          gg[i] = gg[j];
        }
    const double c = scales[k % 5];
    for (std::size_t i = 0; i < 10; ++i) {
      fg[i] = f[i] + gg[i];
      cf[i] = c * f[i];
    }
    const auto nf = holder_norm(f, h1), ng = holder_norm(gg, h1);
    homog &= holder_norm(cf, h1).value == std::abs(c) * nf.value;
    tri &= holder_norm(fg, h1).value <= nf.value + ng.value + 1e-12;
    mono &= holder_norm(f, h2).value <= nf.value;
  }
  const auto grid = interval_grid(17);
  std::vector<double> t(17);
  for (std::size_t i = 0; i < 17; ++i) t[i] = grid.coords()[i][0];
  const double id = holder_norm(t, HolderModulus{grid, 0}).value;
  return {homog && tri && mono && id == 1.0,
          fmt("100 path pairs: homogeneity %d, triangle %d, modulus monotone %d; f(t)=t norm = %.17g", homog, tri, mono, id)};
}

Outcome reproducibility() {
  const auto path = kSource / "scenarios/gauss-bm-32.toml";
  const auto sc = parse_scenario(path);
  auto a = run(Command::verify, sc).json;
  auto b = run(Command::verify, sc).json;
  a.erase("timestamp");
  b.erase("timestamp");
  const bool identical = dump_report(a) == dump_report(b);
  Overrides ov;
  ov.seed = sc.mc.seed + 1;
  const auto c = run(Command::verify, parse_scenario(path, ov)).json;
  const auto d = diff_reports(a, c);
  return {identical && !d.same && d.non_mc_differences == 0,
          fmt("same seed byte-identical %d; other seed: %zu differing fields, %zu outside mc", identical,
              d.entries.size(), d.non_mc_differences)};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    double limit_s;
    std::function<Outcome()> fn;
  };
  const Criterion criteria[] = {
      {"Gaussian identity suite", 1, gaussian_identity},
      {"Conjugacy suite", 1, conjugacy},
      {"Covering exactness", 30, covering},
      {"Entropy-integral convergence", 10, entropy_convergence},
      {"Exact-oracle tail agreement", 60, exact_oracle},
      {"Bound domination and stable C", 120, bound_domination},
      {"ETC rate check", 120, etc_rate},
      {"w-distance suite", 1, w_suite},
      {"Hoelder suite", 5, holder_suite},
      {"Reproducibility", 120, reproducibility},
  };
  int failures = 0;
  int k = 0;
  for (const auto& c : criteria) {
    ++k;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.limit_s;
    failures += !pass;
    std::printf("%s %2d %-32s %.2fs/%gs  %s\n", pass ? "PASS" : "FAIL", k, c.name, secs, c.limit_s, o.detail.c_str());
  }
  std::printf("%d/%d criteria pass\n", k - failures, k);
  return failures == 0 ? 0 : 1;
}
