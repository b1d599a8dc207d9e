#pragma once

#include <vector>

#include "dynquant/config.hpp"
#include "dynquant/dynamics.hpp"
#include "dynquant/grid.hpp"

namespace dynquant {

// Piecewise-constant probability density on a uniform grid over [0,1].
struct Density1D {
    int n = 0;
    double h = 0.0;
    std::vector<double> values;

    Density1D() = default;
    explicit Density1D(int n_, double fill = 0.0)
        : n(n_), h(1.0 / n_), values(static_cast<std::size_t>(n_), fill) {
        if (n_ < 1) throw ConfigError("1d density requires n >= 1");
    }

    static Density1D uniform(int n) { return Density1D(n, 1.0); }

    double mass() const {
        KahanSum s;
        for (double v : values) s.add(v);
        return s.value() * h;
    }
    void normalize() {
        const double m = mass();
        if (!(m > 0.0)) throw NumericalError("cannot normalize a zero-mass density");
        for (double& v : values) v /= m;
    }
    double center(int i) const { return (i + 0.5) * h; }
};

// Sorted atoms on (0,1) with simplex weights (1/N in oracle mode).
struct Atoms1D {
    std::vector<double> x;
    std::vector<double> a;

    static Atoms1D uniform_weights(std::vector<double> xs);
    std::size_t size() const { return x.size(); }
};

// Exact squared 2-Wasserstein distance between piecewise-constant densities,
// integrating |F_p^{-1} - F_q^{-1}|^2 in closed form over merged CDF segments.
double w2_1d(const Density1D& p, const Density1D& q);

struct SemiDiscrete1D {
    double cost = 0.0;                 // (1/2) W_2^2(p, mu)
    std::vector<double> breakpoints;   // z_0 = 0 <= z_1 <= ... <= z_N = 1
    std::vector<double> barycenters;   // per atom
    std::vector<double> potentials;    // per atom, mean-zero gauge
};

// In 1d the optimal Laguerre cells are quantile intervals; psi is chained from
// the interface equalities at the breakpoints.
SemiDiscrete1D semidiscrete_1d(const Density1D& p, const Atoms1D& atoms);

double internal_energy_1d(const Density1D& p, const DiffusionLaw& law);
double lp_norm_1d(const Density1D& p, double q);

struct JkoObjective {
    double internal = 0.0;
    double coupling = 0.0;   // (1/2) W_2^2(p, mu_x)
    double proximal = 0.0;   // (1/(2 tau)) (W_2^2(p_k, p) + |x_k - x|^2)
    double value = 0.0;
};

struct JkoStepResult {
    Density1D p;
    Atoms1D x;
    JkoObjective objective;        // at the returned iterate
    double sq_distance = 0.0;      // W_2^2(p_k, p) + |x_k - x|^2
    int inner_iterations = 0;
};

// One minimizing-movement step: alternating minimization with a damped fixed
// point on the atoms and backtracked entropic mirror descent on the density,
// stopping at the first iterate whose objective decrease falls below
// inner_tol.  Never increases the objective.
JkoStepResult jko_step(const Density1D& p_k, const Atoms1D& x_k, double tau,
                       const DiffusionLaw& law, double inner_tol, bool freeze_atoms = false);

struct JkoRunResult {
    Density1D p;
    Atoms1D x;
    std::vector<DiagnosticsRow> series;      // energy rows (step 0 included)
    std::vector<double> step_sq_distances;   // d^2(z_k, z_{k+1}) per step
    double initial_energy = 0.0;
};

// Staircase MMS trajectory per the configuration; writes density1d_*.csv
// snapshots and series.csv into out_dir.
JkoRunResult run_jko1d(const Config& cfg);

}  // namespace dynquant
