#include <benchmark/benchmark.h>

#include "dynquant/jko1d.hpp"
#include "dynquant/rng.hpp"

using namespace dynquant;

namespace {

Density1D random_density(int n, uint64_t seed) {
    Rng rng(seed);
    Density1D d(n);
    for (auto& v : d.values) v = rng.uniform(0.05, 2.0);
    d.normalize();
    return d;
}

void BM_w2_1d(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Density1D a = random_density(n, 1), b = random_density(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(w2_1d(a, b));
}
BENCHMARK(BM_w2_1d)->Arg(512)->Arg(4096);

void BM_jko_step(benchmark::State& state) {
    Density1D p = random_density(512, 5);
    Atoms1D x = Atoms1D::uniform_weights({0.3, 0.7});
    for (auto _ : state)
        benchmark::DoNotOptimize(jko_step(p, x, 1e-3, DiffusionLaw::linear(), 1e-10));
    state.SetLabel("512 cells");
}
BENCHMARK(BM_jko_step)->Unit(benchmark::kMillisecond);

}  // namespace
