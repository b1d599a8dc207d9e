#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>

#include "dynquant/rng.hpp"
#include "dynquant/sdot.hpp"

using namespace dynquant;

namespace {

AtomSet two_atoms(double a0 = 0.5, double a1 = 0.5) {
    AtomSet atoms = AtomSet::uniform_weights({{0.25, 0.5}, {0.75, 0.5}});
    atoms.weights = {a0, a1};
    return atoms;
}

// Mass of atom 0 for the gauge-fixed potential difference delta = psi0 - psi1,
// by direct per-cell argmin.  Independent of the solver path.
double mass0_of_delta(const Grid& g, const AtomSet& atoms, double delta) {
    KahanSum s;
    const Vec2 x0 = atoms.positions[0], x1 = atoms.positions[1];
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const Vec2 c = g.cell_center(i, j);
            const double c0 = 0.5 * (c - x0).norm2() - 0.5 * delta;
            const double c1 = 0.5 * (c - x1).norm2() + 0.5 * delta;
            if (c0 <= c1) s.add(1.0);
        }
    return s.value() * g.cell_area();  // uniform density 1
}

}  // namespace

TEST_CASE("assign_cells basics") {
    Grid g(Domain(0, 1, 0, 1), 64, 64);

    AtomSet one = AtomSet::uniform_weights({{0.37, 0.81}});
    auto labels = assign_cells(g, one, {0.0});
    CHECK(std::all_of(labels.begin(), labels.end(), [](int32_t l) { return l == 0; }));

    AtomSet two = two_atoms();
    labels = assign_cells(g, two, {0.0, 0.0});
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            CHECK(labels[g.index(i, j)] == (g.center_x(i) < 0.5 ? 0 : 1));

    // psi = (0.03, -0.03): boundary from psi0 - psi1 = (u - 1/2)/2 at u = 0.62
    labels = assign_cells(g, two, {0.03, -0.03});
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i)
            CHECK(labels[g.index(i, j)] == (g.center_x(i) < 0.62 ? 0 : 1));
}

TEST_CASE("dead atoms never own cells; empty measure throws") {
    Grid g(Domain(0, 1, 0, 1), 32, 32);
    AtomSet atoms = AtomSet::uniform_weights({{0.2, 0.2}, {0.5, 0.5}, {0.8, 0.8}});
    atoms.alive[1] = 0;
    atoms.weights = {0.5, 0.0, 0.5};
    auto labels = assign_cells(g, atoms, {0.0, 0.0, 0.0});
    for (int32_t l : labels) CHECK(l != 1);

    AtomSet dead = atoms;
    dead.alive = {0, 0, 0};
    CHECK_THROWS_WITH_AS(assign_cells(g, dead, {}), "empty atomic measure", NumericalError);
}

TEST_CASE("cell_masses and barycenters on analytic splits") {
    Grid g(Domain(0, 1, 0, 1), 128, 128);
    Density d = Density::uniform(g);

    auto labels = assign_cells(g, two_atoms(), {0.0, 0.0});
    auto masses = cell_masses(d, labels, 2);
    CHECK(masses[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(masses[1] == doctest::Approx(0.5).epsilon(1e-12));

    AtomSet two = two_atoms();
    auto b = barycenters(d, two, labels);
    CHECK(b[0].x == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(b[0].y == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b[1].x == doctest::Approx(0.75).epsilon(1e-12));

    // boundary at u = 0.62: masses within one grid column, centroid at 0.31
    labels = assign_cells(g, two, {0.03, -0.03});
    masses = cell_masses(d, labels, 2);
    CHECK(std::abs(masses[0] - 0.62) <= 1.0 / 128);
    b = barycenters(d, two, labels);
    CHECK(std::abs(b[0].x - 0.31) <= 1.0 / 128);
    CHECK(b[0].y == doctest::Approx(0.5).epsilon(1e-10));

    AtomSet one = AtomSet::uniform_weights({{0.3, 0.7}});
    labels = assign_cells(g, one, {0.0});
    CHECK(cell_masses(d, labels, 1)[0] == doctest::Approx(1.0).epsilon(1e-12));
    b = barycenters(d, one, labels);
    CHECK(b[0].x == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(b[0].y == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("solve_potentials on analytic configurations") {
    Grid g(Domain(0, 1, 0, 1), 128, 128);
    Density d = Density::uniform(g);

    // symmetric: psi = 0 is optimal
    Tessellation t = solve_potentials(d, two_atoms());
    CHECK(t.converged);
    CHECK(std::abs(t.potentials[0]) < 1e-12);
    CHECK(std::abs(t.masses[0] - 0.5) < 1e-12);

    // asymmetric weights: analytic boundary u = 0.62, psi = (0.03, -0.03)
    t = solve_potentials(d, two_atoms(0.62, 0.38));
    const double u = 0.5 + 2.0 * (t.potentials[0] - t.potentials[1]);
    CHECK(std::abs(u - 0.62) <= 2.0 / 128);
    CHECK(std::abs(t.masses[0] - 0.62) <= 2.0 / 128);
    CHECK(std::abs(t.potentials[0] + t.potentials[1]) < 1e-12);  // mean-zero gauge

    // single atom
    AtomSet one = AtomSet::uniform_weights({{0.4, 0.6}});
    t = solve_potentials(d, one);
    CHECK(t.converged);
    CHECK(t.potentials[0] == 0.0);
    CHECK(t.masses[0] == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(
        solve_potentials(d, AtomSet::uniform_weights({{0.5, 0.5}, {0.5, 0.5}})),
        NumericalError);
}

TEST_CASE("N=2 oracle equivalence: brute-force delta scan") {
    Grid g(Domain(0, 1, 0, 1), 128, 128);
    Density d = Density::uniform(g);
    Rng rng(2024);
    for (int rep = 0; rep < 2; ++rep) {
        AtomSet atoms = AtomSet::uniform_weights(
            {{rng.uniform(0.15, 0.45), rng.uniform(0.2, 0.8)},
             {rng.uniform(0.55, 0.85), rng.uniform(0.2, 0.8)}});
        const double a0 = rng.uniform(0.3, 0.7);
        atoms.weights = {a0, 1.0 - a0};

        const double diam2 = g.domain().diam() * g.domain().diam();
        double best_delta = 0.0, best_err = 1e300;
        for (double delta = -0.5 * diam2; delta <= 0.5 * diam2; delta += 1e-4) {
            const double err = std::abs(mass0_of_delta(g, atoms, delta) - a0);
            if (err < best_err) {
                best_err = err;
                best_delta = delta;
            }
        }
        Tessellation t = solve_potentials(d, atoms);
        const double solver_delta = t.potentials[0] - t.potentials[1];
        CHECK(std::abs(solver_delta - best_delta) <= 2e-4);
    }
}

TEST_CASE("transport_cost closed forms and pixel oracle") {
    Grid g(Domain(0, 1, 0, 1), 256, 256);
    Density d = Density::uniform(g);

    // single centered atom: (1/2) W2^2 = 1/12
    AtomSet center = AtomSet::uniform_weights({{0.5, 0.5}});
    Tessellation t = solve_potentials(d, center);
    CHECK(std::abs(transport_cost(d, center, t) - 1.0 / 12.0) < 1e-4);

    // collocated mass: density concentrated in the atom's cell
    Density spike(g);
    spike[g.index(128, 128)] = 1.0 / g.cell_area();
    AtomSet at_cell = AtomSet::uniform_weights({{g.center_x(128), g.center_y(128)}});
    t = solve_potentials(spike, at_cell);
    const double cell_diam2 = g.hx() * g.hx() + g.hy() * g.hy();
    CHECK(transport_cost(spike, at_cell, t) <= cell_diam2);

    // symmetric two-atom split against the brute-force pixel sum and the
    // closed form 5/96 for two half-squares
    AtomSet two = two_atoms();
    t = solve_potentials(d, two);
    KahanSum oracle;
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const Vec2 c = g.cell_center(i, j);
            const double d0 = 0.5 * (c - two.positions[0]).norm2();
            const double d1 = 0.5 * (c - two.positions[1]).norm2();
            oracle.add(std::min(d0, d1) / g.domain().area());
        }
    const double primal = oracle.value() * g.cell_area();
    const double dual = transport_cost(d, two, t);
    CHECK(std::abs(dual - primal) < 1e-6);
    CHECK(std::abs(dual - 5.0 / 96.0) < 1e-4);
    CHECK(dual >= 0.0);
}

TEST_CASE("gauge invariance of labels, masses and cost") {
    Grid g(Domain(0, 1, 0, 1), 96, 96);
    Density d = Density::uniform(g);
    AtomSet atoms = AtomSet::uniform_weights({{0.2, 0.3}, {0.7, 0.6}, {0.45, 0.8}});
    Tessellation t = solve_potentials(d, atoms);

    std::vector<double> shifted = t.potentials;
    for (double& p : shifted) p += 0.37;
    auto labels2 = assign_cells(g, atoms, shifted);
    CHECK(labels2 == t.labels);

    Tessellation t2 = t;
    t2.potentials = shifted;
    const double c1 = transport_cost(d, atoms, t);
    const double c2 = transport_cost(d, atoms, t2);
    CHECK(std::abs(c1 - c2) < 1e-10);

    auto m2 = cell_masses(d, labels2, atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k)
        CHECK(m2[k] == doctest::Approx(t.masses[k]).epsilon(1e-14));
}

TEST_CASE("atom_gradient forms and finite differences") {
    Grid g(Domain(0, 1, 0, 1), 256, 256);
    Density d = Density::uniform(g);

    // centroidal configuration: zero gradient
    AtomSet two = two_atoms();
    Tessellation t = solve_potentials(d, two);
    auto grad = atom_gradient(two, t);
    CHECK(grad[0].norm() < 1e-10);
    CHECK(grad[1].norm() < 1e-10);

    // single off-center atom: g = 1 * (x - domain centroid)
    AtomSet off = AtomSet::uniform_weights({{0.6, 0.5}});
    t = solve_potentials(d, off);
    grad = atom_gradient(off, t);
    CHECK(grad[0].x == doctest::Approx(0.1).epsilon(1e-9));
    CHECK(std::abs(grad[0].y) < 1e-12);

    // directional derivative of the dual cost vs the gradient formula
    AtomSet atoms = AtomSet::uniform_weights({{0.31, 0.42}, {0.68, 0.61}});
    t = solve_potentials(d, atoms);
    grad = atom_gradient(atoms, t);
    const double delta = 1e-3 * g.domain().diam();
    SolveOptions warm;
    warm.warm_potentials = t.potentials;
    AtomSet ap = atoms, am = atoms;
    ap.positions[0].x += delta;
    am.positions[0].x -= delta;
    const double fd = (transport_cost(d, ap, solve_potentials(d, ap, warm)) -
                       transport_cost(d, am, solve_potentials(d, am, warm))) /
                      (2.0 * delta);
    CHECK(std::abs(fd - grad[0].x) <= 1e-3 * std::abs(fd));
}

TEST_CASE("gradient consistency on random configurations") {
    Grid g(Domain(0, 1, 0, 1), 128, 128);
    Density d = Density::uniform(g);
    Rng rng(99);
    for (int n : {3, 5}) {
        std::vector<Vec2> pts;
        for (int k = 0; k < n; ++k)
            pts.push_back({rng.uniform(0.15, 0.85), rng.uniform(0.15, 0.85)});
        AtomSet atoms = AtomSet::uniform_weights(pts);
        Tessellation t = solve_potentials(d, atoms);
        auto grad = atom_gradient(atoms, t);
        SolveOptions warm;
        warm.warm_potentials = t.potentials;

        const double delta = 1e-3 * g.domain().diam();
        double num2 = 0.0, den2 = 0.0;
        for (int k = 0; k < n; ++k) {
            for (int dim = 0; dim < 2; ++dim) {
                AtomSet ap = atoms, am = atoms;
                double& cp = dim == 0 ? ap.positions[k].x : ap.positions[k].y;
                double& cm = dim == 0 ? am.positions[k].x : am.positions[k].y;
                cp += delta;
                cm -= delta;
                const double fd = (transport_cost(d, ap, solve_potentials(d, ap, warm)) -
                                   transport_cost(d, am, solve_potentials(d, am, warm))) /
                                  (2.0 * delta);
                const double an = dim == 0 ? grad[k].x : grad[k].y;
                num2 += (fd - an) * (fd - an);
                den2 += fd * fd;
            }
        }
        CHECK(std::sqrt(num2) <= 1e-2 * std::sqrt(den2));
    }
}

TEST_CASE("potential_field values and advection vectors") {
    Grid g(Domain(0, 1, 0, 1), 64, 64);
    Density d = Density::uniform(g);
    AtomSet one = AtomSet::uniform_weights({{0.5, 0.5}});
    Tessellation t = solve_potentials(d, one);
    PotentialField f = potential_field(g, one, t);
    for (int j = 0; j < g.ny(); ++j)
        for (int i = 0; i < g.nx(); ++i) {
            const std::size_t c = g.index(i, j);
            const Vec2 r = g.cell_center(i, j) - Vec2{0.5, 0.5};
            CHECK(f.phi[c] == doctest::Approx(0.5 * r.norm2()).epsilon(1e-12));
            CHECK(f.grad[c].x == doctest::Approx(r.x).epsilon(1e-12));
        }

    // two-atom symmetric split: |grad Phi| at the cell containing (0.1, 0.5)
    AtomSet two = two_atoms();
    t = solve_potentials(d, two);
    f = potential_field(g, two, t);
    const int i = static_cast<int>(0.1 * g.nx());
    const int j = g.ny() / 2;
    const Vec2 expect = g.cell_center(i, j) - Vec2{0.25, 0.5};
    CHECK(f.grad[g.index(i, j)].norm() == doctest::Approx(expect.norm()).epsilon(1e-12));
}

TEST_CASE("solver scales to N=500 on a 256x256 grid") {
    Grid g(Domain(0, 1, 0, 1), 256, 256);
    Density d = Density::uniform(g);
    AtomSet atoms;
    Rng rng(7);
    std::vector<Vec2> pts;
    while (pts.size() < 500) {
        Vec2 p{rng.uniform(0.02, 0.98), rng.uniform(0.02, 0.98)};
        bool ok = true;
        for (const Vec2& q : pts)
            if (dist(p, q) < 5e-3) {
                ok = false;
                break;
            }
        if (ok) pts.push_back(p);
    }
    atoms = AtomSet::uniform_weights(pts);
    SolveOptions opt;
    opt.tol = 1e-4;
    opt.max_iter = 3000;
    const auto t0 = std::chrono::steady_clock::now();
    Tessellation t = solve_potentials(d, atoms, opt);
    const auto t1 = std::chrono::steady_clock::now();
    CHECK(t.converged);
    CHECK(t.residual <= 1e-4);
    KahanSum s;
    for (std::size_t k = 0; k < atoms.size(); ++k) s.add(t.masses[k]);
    CHECK(std::abs(s.value() - 1.0) < 1e-12);
    CHECK(std::chrono::duration<double>(t1 - t0).count() < 300.0);
}
