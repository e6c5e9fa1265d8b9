#include <benchmark/benchmark.h>

#include <vector>

#include "tightlab/chaining.hpp"
#include "tightlab/field_lab.hpp"
#include "tightlab/majorizing.hpp"
#include "tightlab/orlicz.hpp"

using namespace tightlab;

namespace {

Exec mode(const benchmark::State& s) { return s.range(0) ? Exec::parallel : Exec::serial; }

void label(benchmark::State& s) { s.SetLabel(s.range(0) ? "parallel" : "serial"); }

void BM_sample_ensemble(benchmark::State& s) {
  const auto mesh = brownian_grid(64);
  const auto model = RandomFieldModel::gaussian(brownian_covariance(mesh), mesh.size());
  for (auto _ : s) benchmark::DoNotOptimize(sample_ensemble(model, 20000, 1, mode(s)));
  label(s);
}

void BM_mc_tail_table(benchmark::State& s) {
  const auto mesh = brownian_grid(32);
  const auto model = RandomFieldModel::gaussian(brownian_covariance(mesh), mesh.size());
  const std::vector<double> u{1.0, 1.5, 2.0};
  const std::vector<std::size_t> n{1, 4, 16};
  for (auto _ : s) benchmark::DoNotOptimize(mc_tail_table(model, mesh, u, n, 5000, 1, mode(s)));
  label(s);
}

void BM_natural_distance(benchmark::State& s) {
  const auto mesh = brownian_grid(48);
  const auto model = RandomFieldModel::gaussian(brownian_covariance(mesh), mesh.size());
  std::vector<ScalarLaw> laws;
  for (std::size_t t = 0; t < model.points(); ++t) laws.push_back(model.point_law(t));
  const auto chi = chi_function(phi_of(laws), {}, symmetric_grid(64.0, 513));
  for (auto _ : s) benchmark::DoNotOptimize(natural_distance(model, mesh, chi, {}, mode(s)));
  label(s);
}

void BM_w_matrix(benchmark::State& s) {
  const auto mesh = brownian_grid(96);
  const auto phi = OrliczGenerator::gauss2();
  const auto m = PointMeasure::uniform(mesh.size());
  for (auto _ : s) benchmark::DoNotOptimize(w_matrix(mesh, m, phi, 1.0, mode(s)));
  label(s);
}

}  // namespace

BENCHMARK(BM_sample_ensemble)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mc_tail_table)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_natural_distance)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_w_matrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
