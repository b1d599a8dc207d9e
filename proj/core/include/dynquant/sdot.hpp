#pragma once

#include <cstdint>
#include <vector>

#include "dynquant/atoms.hpp"
#include "dynquant/grid.hpp"

namespace dynquant {

// Laguerre tessellation of the grid for a given atom set.  All per-atom
// vectors are indexed by the original atom id; entries of dead atoms are
// zero / sentinel and must be ignored.  Potentials carry the mean-zero gauge
// over alive atoms.
struct Tessellation {
    std::vector<int32_t> labels;       // per cell: owning alive atom id
    std::vector<double> potentials;    // per atom, mean-zero over alive
    std::vector<double> masses;        // per atom: rho(Lag_i)
    std::vector<Vec2> barycenters;     // per atom; = position when mass is 0
    std::vector<uint8_t> empty_cell;   // per atom: 1 if mass 0 (sentinel barycenter)
    bool converged = false;
    double residual = 0.0;             // max_i |masses[i] - a_i|
    int iterations = 0;
    double dual_value = 0.0;           // dual objective at the returned potentials
};

struct SolveOptions {
    double tol = 0.0;                    // <= 0: max(1e-7, 0.5*hx*hy*max rho)
    int max_iter = 1000;
    std::vector<double> warm_potentials; // per atom; empty = start from zero
};

// Per-cell argmin_i (1/2)|x_c - x_i|^2 - psi_i over alive atoms, lowest index
// winning ties.  Throws "empty atomic measure" with no alive atom.
std::vector<int32_t> assign_cells(const Grid& grid, const AtomSet& atoms,
                                  const std::vector<double>& potentials);

// rho-mass of each label class (fixed-order compensated accumulation).
std::vector<double> cell_masses(const Density& density, const std::vector<int32_t>& labels,
                                std::size_t n_atoms);

// Density-weighted centroid of each label class; zero-mass classes get the
// atom position as a flagged sentinel.
std::vector<Vec2> barycenters(const Density& density, const AtomSet& atoms,
                              const std::vector<int32_t>& labels,
                              std::vector<uint8_t>* empty_flags = nullptr);

// Maximizes the concave semi-discrete dual by backtracking gradient ascent
// (gradient a_i - rho(Lag_i), Barzilai-Borwein trial step, Armijo acceptance,
// mean-zero gauge after every iterate).
Tessellation solve_potentials(const Density& density, const AtomSet& atoms,
                              const SolveOptions& options = {});

// (1/2) W_2^2(rho, mu) evaluated as the dual value at the tessellation's
// potentials: sum_i int_{Lag_i} ((1/2)|x-x_i|^2 - psi_i) drho + sum_i a_i psi_i.
double transport_cost(const Density& density, const AtomSet& atoms, const Tessellation& tess);

// Gradient of (1/2) W_2^2 in the atom positions: g_i = masses[i] (x_i - b_i),
// zero for dead atoms.
std::vector<Vec2> atom_gradient(const AtomSet& atoms, const Tessellation& tess);

// Kantorovich potential Phi(x_c) = (1/2)|x_c - x_label|^2 - psi_label and its
// gradient field grad Phi(x_c) = x_c - x_label, both per cell.
struct PotentialField {
    std::vector<double> phi;
    std::vector<Vec2> grad;
};
PotentialField potential_field(const Grid& grid, const AtomSet& atoms, const Tessellation& tess);

// Default solver tolerance: one cannot resolve masses below one cell's content.
double default_sdot_tolerance(const Density& density);

}  // namespace dynquant
