#include <benchmark/benchmark.h>

#include "dynquant/rng.hpp"
#include "dynquant/sdot.hpp"

using namespace dynquant;

namespace {

AtomSet random_atoms(int n, uint64_t seed) {
    Rng rng(seed);
    std::vector<Vec2> pts;
    while (static_cast<int>(pts.size()) < n) {
        Vec2 p{rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95)};
        bool ok = true;
        for (const Vec2& q : pts)
            if (dist(p, q) < 0.3 / std::sqrt(static_cast<double>(n))) {
                ok = false;
                break;
            }
        if (ok) pts.push_back(p);
    }
    return AtomSet::uniform_weights(pts);
}

void BM_assign_cells(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Grid g(Domain(0, 1, 0, 1), 128, 128);
    AtomSet atoms = random_atoms(n, 3);
    std::vector<double> psi(n, 0.0);
    for (auto _ : state) benchmark::DoNotOptimize(assign_cells(g, atoms, psi));
    state.SetItemsProcessed(state.iterations() * g.cell_count() * n);
}
BENCHMARK(BM_assign_cells)->Arg(50)->Arg(200);

void BM_solve_potentials_cold(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Grid g(Domain(0, 1, 0, 1), 128, 128);
    Density d = Density::uniform(g);
    AtomSet atoms = random_atoms(n, 3);
    for (auto _ : state) benchmark::DoNotOptimize(solve_potentials(d, atoms));
}
BENCHMARK(BM_solve_potentials_cold)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

void BM_solve_potentials_warm(benchmark::State& state) {
    const int n = static_cast<int>(state.range(0));
    Grid g(Domain(0, 1, 0, 1), 128, 128);
    Density d = Density::uniform(g);
    AtomSet atoms = random_atoms(n, 3);
    Tessellation t = solve_potentials(d, atoms);
    AtomSet moved = atoms;
    for (auto& p : moved.positions) p.x = std::min(0.99, p.x + 3e-3);
    SolveOptions opt;
    opt.warm_potentials = t.potentials;
    for (auto _ : state) benchmark::DoNotOptimize(solve_potentials(d, moved, opt));
}
BENCHMARK(BM_solve_potentials_warm)->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace
