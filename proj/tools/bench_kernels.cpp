// OpenMP kernels against their serial references.
//
//   bench_kernels --benchmark_filter=Batch
//   MINPERTURB_THREADS=4 bench_kernels

#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "minperturb/batch.hpp"
#include "minperturb/classifier.hpp"
#include "minperturb/oracle.hpp"

namespace mp = minperturb;

namespace {

std::vector<mp::Vector> points(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.5);
  std::vector<mp::Vector> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(mp::Vector::NullaryExpr(2, [&](Eigen::Index) { return g(rng); }));
  return out;
}

const mp::Mlp& net() {
  static const mp::Mlp m({2, 32, 3}, mp::Activation::Tanh, 1);
  return m;
}

mp::Matrix ellipse_axes() {
  mp::Matrix a(2, 2);
  a << 2.0, 0.0, 0.0, 1.0;
  return a;
}

void BM_BatchSerial(benchmark::State& state) {
  const auto xs = points(std::size_t(state.range(0)), 3);
  const mp::AttackConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(mp::attack_batch_serial(net(), xs, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchParallel(benchmark::State& state) {
  const auto xs = points(std::size_t(state.range(0)), 3);
  const mp::AttackConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(mp::attack_batch(net(), xs, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BoundaryScanSerial(benchmark::State& state) {
  const mp::Matrix axes = ellipse_axes();
  const mp::Vector x0 = mp::Vector::Constant(2, 2.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(mp::nearest_boundary_sample_serial(x0, axes, std::size_t(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BoundaryScanParallel(benchmark::State& state) {
  const mp::Matrix axes = ellipse_axes();
  const mp::Vector x0 = mp::Vector::Constant(2, 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(mp::nearest_boundary_sample(x0, axes, std::size_t(state.range(0))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GridScan(benchmark::State& state) {
  mp::GridScanOptions opt;
  opt.angles = std::size_t(state.range(0));
  opt.radial_steps = 200;
  const mp::Vector x0 = points(1, 9).front();
  for (auto _ : state) benchmark::DoNotOptimize(mp::grid_scan_oracle(x0, net(), 6.0, opt));
}

}  // namespace

BENCHMARK(BM_BatchSerial)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BatchParallel)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_BoundaryScanSerial)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_BoundaryScanParallel)->Arg(100000)->Arg(1000000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_GridScan)->Arg(360)->Arg(1440)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
