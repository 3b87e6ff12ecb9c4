#include <benchmark/benchmark.h>

#include <kslight/coupler.hpp>
#include <kslight/fock_state.hpp>
#include <kslight/homodyne.hpp>
#include <kslight/quadrature.hpp>
#include <kslight/sampling.hpp>
#include <kslight/weak.hpp>

using namespace kslight;

namespace {

FockState circular(double alpha, int cutoff) {
    const std::vector<cplx> a{cplx(alpha), cplx(0.0, alpha)};
    return coherent_product(a, cutoff);
}

void BM_TransferMatrix(benchmark::State& st) {
    CouplerSettings s;
    s.wavelength = 650e-9;
    s.kappa = 0.1 * s.k0();
    s.length = 2e-3;
    s.delta = 0.3 * s.kappa;
    for (auto _ : st) benchmark::DoNotOptimize(transfer_matrix(s));
}
BENCHMARK(BM_TransferMatrix);

void BM_Rotation(benchmark::State& st) {
    // Superposition filling the top photon-number shell.
    const int n = static_cast<int>(st.range(0));
    FockState s(2, n);
    s.at({n, 0}) = 1.0;
    s.at({n / 2, n - n / 2}) = cplx(0.0, 1.0);
    s.at({1, 1}) = 0.5;
    s.normalize();
    for (auto _ : st) benchmark::DoNotOptimize(apply_rotation(s, 0.7));
}
BENCHMARK(BM_Rotation)->Arg(12)->Arg(30)->Arg(50);

void BM_QuadratureDensity(benchmark::State& st) {
    const FockState s = circular(4.0, 50);
    const Grid1D g = default_sampling_grid(s, static_cast<std::size_t>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(quadrature_density(s, 0, Axis::FieldStrength, g));
}
BENCHMARK(BM_QuadratureDensity)->Arg(512)->Arg(2048);

void BM_RotatedMarginalSample(benchmark::State& st) {
    const FockState s = circular(4.0, 50);
    const RotatedMarginal m(s, 0.4, 1, default_sampling_grid(s));
    RandomStream rng(1, 0);
    for (auto _ : st) benchmark::DoNotOptimize(m.sample(6.283 * rng.uniform(), rng.uniform()));
}
BENCHMARK(BM_RotatedMarginalSample);

void BM_Campaign(benchmark::State& st) {
    const FockState s = circular(4.0, 50);
    HomodyneConfig cfg;
    cfg.n_samples = static_cast<std::size_t>(st.range(0));
    cfg.chi_list = uniform_angles(32, kPi);
    for (auto _ : st) benchmark::DoNotOptimize(run_campaign(s, cfg));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_Campaign)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_WeakScanAngle(benchmark::State& st) {
    WeakConfig cfg;
    cfg.chi_grid = {kPi / 3};
    const FockState s = noon2(12);
    for (auto _ : st) benchmark::DoNotOptimize(weak_scan(s, cfg));
}
BENCHMARK(BM_WeakScanAngle)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
