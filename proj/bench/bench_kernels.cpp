#include "nsmk/dynamics.hpp"
#include "nsmk/ensemble.hpp"
#include "nsmk/noise.hpp"
#include "nsmk/nonlinearity.hpp"
#include "nsmk/spectral_ops.hpp"

#include <benchmark/benchmark.h>

namespace {

void BM_B_pseudospectral(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const auto u = nsmk::random_field(n, 1.0, 7, 0);
    const auto v = nsmk::random_field(n, 1.0, 7, 1);
    for (auto _ : st) benchmark::DoNotOptimize(nsmk::nonlinearity_B(u, v));
}
BENCHMARK(BM_B_pseudospectral)->Arg(2)->Arg(4)->Arg(8)->Arg(16);

// triad sum, O(N^6)
void BM_B_direct(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const auto u = nsmk::random_field(n, 1.0, 7, 0);
    const auto v = nsmk::random_field(n, 1.0, 7, 1);
    for (auto _ : st) benchmark::DoNotOptimize(nsmk::nonlinearity_B_direct(u, v));
}
BENCHMARK(BM_B_direct)->Arg(2)->Arg(4);

nsmk::RunConfig ensemble_config() {
    nsmk::RunConfig c;
    c.nu = 0.5;
    c.n_modes = 4;
    c.dt = 0.01;
    c.t_final = 1.0;
    c.burn_in = 0.0;
    c.system = nsmk::SystemKind::full;
    c.noise = nsmk::CovarianceSpec{.sigma0 = 1.0, .q = 2.0, .alpha0 = 0.25, .n_modes = 4}.normalized_to_trace(1.0);
    c.seed = 11;
    return c;
}

// range(0) = workers; 1 is the serial reference
void BM_ensemble(benchmark::State& st) {
    const auto cfg = ensemble_config();
    const nsmk::SpectralField x0(cfg.n_modes);
    const int workers = static_cast<int>(st.range(0));
    std::vector<double> last(16);
    for (auto _ : st) {
        nsmk::parallel_for(last.size(), workers, [&](std::size_t i) {
            nsmk::SimulateOptions o;
            o.trajectory_index = i;
            last[i] = nsmk::simulate(cfg, x0, o).h2.back();
        });
        benchmark::DoNotOptimize(last.data());
    }
    st.counters["trajectories/s"] =
        benchmark::Counter(static_cast<double>(last.size()) * st.iterations(), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_ensemble)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
