#include <benchmark/benchmark.h>

#include "dynquant/pde.hpp"

using namespace dynquant;

namespace {

void BM_step_density(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Grid g(Domain(0, 1, 0, 1), n, n);
    Density d = Density::uniform(g);
    AtomSet atoms = AtomSet::uniform_weights({{0.3, 0.4}, {0.7, 0.6}});
    Tessellation t = solve_potentials(d, atoms);
    FaceVelocity vel = face_velocities(g, atoms, t);
    for (auto _ : state)
        benchmark::DoNotOptimize(step_density(d, DiffusionLaw::linear(), vel, 0.01));
    state.SetLabel("macro step tau=0.01");
}
BENCHMARK(BM_step_density)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

}  // namespace
