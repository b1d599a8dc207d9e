#pragma once

#include <vector>

#include "dynquant/sdot.hpp"

namespace dynquant {

// Drift velocity u = -grad Phi = x_label - x sampled at face midpoints.
// u lives on the (nx+1) x ny vertical faces (x component), v on the
// nx x (ny+1) horizontal faces (y component).  Boundary faces are zeroed;
// no-flux is enforced by zeroing boundary fluxes of both terms.
struct FaceVelocity {
    int nx = 0, ny = 0;
    std::vector<double> u;  // (nx+1)*ny, index j*(nx+1)+i
    std::vector<double> v;  // nx*(ny+1), index j*nx+i

    double max_speed() const;
};

FaceVelocity face_velocities(const Grid& grid, const AtomSet& atoms, const Tessellation& tess);

// Explicit-stability bound: safety * min(h^2/(4 max P'), h/(max|vel|)).
double cfl_timestep(const Grid& grid, const Density& d, const DiffusionLaw& law,
                    const FaceVelocity& vel, double safety);

// Advances d rho/dt = Lap P(rho) + div(rho grad Phi) over [0, horizon] with the
// velocity frozen, CFL sub-stepping, upwind advection and centered diffusion
// of P(rho).  Conservative and positivity-preserving under the CFL bound.
Density step_density(const Density& d, const DiffusionLaw& law, const FaceVelocity& vel,
                     double horizon, double cfl_safety = 0.4);

}  // namespace dynquant
