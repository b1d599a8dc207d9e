#pragma once

#include <string>
#include <vector>

#include "dynquant/config.hpp"
#include "dynquant/pde.hpp"
#include "dynquant/sdot.hpp"

namespace dynquant {

// Cusp mass-operation cost g(a) = kappa a^beta, beta in (0,1), g(0) = 0.
struct MassCostLaw {
    double kappa = 1.0;
    double beta = 0.5;

    MassCostLaw() = default;
    MassCostLaw(double k, double b) : kappa(k), beta(b) {
        if (!(kappa > 0.0)) throw ConfigError("g_kappa must be > 0");
        if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("g_beta must lie in (0,1)");
    }

    double g(double a) const { return a > 0.0 ? kappa * std::pow(a, beta) : 0.0; }
    double g_prime(double a) const { return kappa * beta * std::pow(a, beta - 1.0); }
};

struct DynamicsConfig {
    SimMode mode = SimMode::Quantization;
    double tau = 0.01;
    double alpha = 1.0;
    DiffusionLaw law = DiffusionLaw::linear();
    MassCostLaw mass_cost;
    double a_min = 1e-6;
    PsiSign psi_sign = PsiSign::EulerLagrange;
    double ot_tol = 0.0;
    int ot_max_iter = 1000;
    double cfl_safety = 0.4;

    static DynamicsConfig from(const Config& cfg);
};

struct SimState {
    double time = 0.0;
    long step = 0;
    Density density;
    AtomSet atoms;
    Tessellation tess;   // consistent with (density, atoms)
    long clamp_events = 0;
};

struct EnergyBreakdown {
    double internal = 0.0;
    double mass_cost = 0.0;
    double transport = 0.0;
    double total = 0.0;
    double max_dist_to_barycenter = 0.0;
    double min_pairwise_atom_dist = 0.0;
    double min_pairwise_barycenter_dist = 0.0;
    double mass_error = 0.0;
    double linf_density = 0.0;
};

// Solves the tessellation for (density, atoms) so the state invariant holds.
SimState make_initial_state(Density density, AtomSet atoms, const DynamicsConfig& cfg);

// One step of the splitting scheme: atom Euler update from the current
// tessellation, weight dynamics with absorbing deaths (full mode), re-solve,
// frozen-advection PDE advance over tau, final re-solve for diagnostics.
SimState splitting_step(const SimState& state, const DynamicsConfig& cfg);

EnergyBreakdown energy(const SimState& state, const DynamicsConfig& cfg);

// Normalized Gibbs profile rho ~ sum_i exp(-((1/2)|x-x_i|^2 - psi_i)) 1_{Lag_i}.
Density gibbs_profile(const Grid& grid, const AtomSet& atoms, const Tessellation& tess);
double gibbs_l1_distance(const Density& density, const AtomSet& atoms, const Tessellation& tess);

struct DiagnosticsRow {
    long step = 0;
    double time = 0.0;
    EnergyBreakdown e;
    long alive_count = 0;
    long clamp_events = 0;
    double gibbs_l1 = 0.0;
};

struct RunResult {
    SimState state;
    std::vector<DiagnosticsRow> series;
};

// Atom initialization: uniform in the margin-shrunk domain, rejection-sampled
// to pairwise distance >= 0.5 * min(width,height) / sqrt(N).
std::vector<Vec2> sample_atoms(const Domain& domain, int n, uint64_t seed, double margin);

// Full run per the configuration: `steps` splitting steps, one diagnostics row
// per step (step 0 included), snapshots every snapshot_every steps into
// out_dir, and series.csv.  Deterministic given (config, seed, build).
RunResult run_simulation(const Config& cfg);

// series.csv column row (shared by run_simulation and the jko driver).
std::string series_csv_header();
std::string series_csv_line(const DiagnosticsRow& row);

}  // namespace dynquant
