// OpenMP kernels against their serial references on the same inputs.

#include <benchmark/benchmark.h>

#include <vector>

#include "tdas/fluctuations.hpp"
#include "tdas/stability.hpp"

namespace {

using namespace tdas;

ModelParams at_ratio(double r) {
    const ModelParams p = ModelParams::experiment();
    return p.with_coupling(r * critical_coupling(p));
}

std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> v(n);
    for (int i = 0; i < n; ++i) v[i] = lo + (hi - lo) * i / (n - 1);
    return v;
}

const ModelParams kScanParams = at_ratio(1.1);
const std::vector<double> kK = linspace(0.1 * kScanParams.kappa / 2.0, kScanParams.kappa / 2.0, 8);
const std::vector<double> kTau = linspace(0.0, 150.0, 31);

void BM_scan_k_tau(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(scan_k_tau(kScanParams, FixedPointKind::SuperRadiantPlus, kK, kTau));
    }
}

void BM_scan_k_tau_serial(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(scan_k_tau_serial(kScanParams, FixedPointKind::SuperRadiantPlus, kK, kTau));
    }
}

const ModelParams kSweepParams = ModelParams::experiment();
const std::vector<double> kRatios = exponent_grid(CriticalSide::Above, 1e-4, 1e-1, 32);

void BM_sweep_fluctuations(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            sweep_fluctuations(kSweepParams, CriticalSide::Above, kSweepParams.kappa / 2.0, 50.0, kRatios));
    }
}

void BM_sweep_fluctuations_serial(benchmark::State& state) {
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            sweep_fluctuations_serial(kSweepParams, CriticalSide::Above, kSweepParams.kappa / 2.0, 50.0, kRatios));
    }
}

} // namespace

BENCHMARK(BM_scan_k_tau)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_scan_k_tau_serial)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_sweep_fluctuations)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_sweep_fluctuations_serial)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
