#include "dynquant/pde.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dynquant/parallel.hpp"

namespace dynquant {

namespace {

// Laguerre label of an arbitrary point (lowest alive index wins ties).
int32_t point_label(const Vec2& p, const AtomSet& atoms, const Tessellation& tess) {
    double best = std::numeric_limits<double>::infinity();
    int32_t best_i = -1;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!atoms.alive[i]) continue;
        const double cost = 0.5 * (p - atoms.positions[i]).norm2() - tess.potentials[i];
        if (cost < best) {
            best = cost;
            best_i = static_cast<int32_t>(i);
        }
    }
    return best_i;
}

}  // namespace

double FaceVelocity::max_speed() const {
    double m = 0.0;
    for (double s : u) m = std::max(m, std::abs(s));
    for (double s : v) m = std::max(m, std::abs(s));
    return m;
}

FaceVelocity face_velocities(const Grid& grid, const AtomSet& atoms, const Tessellation& tess) {
    const int nx = grid.nx(), ny = grid.ny();
    FaceVelocity f;
    f.nx = nx;
    f.ny = ny;
    f.u.assign(static_cast<std::size_t>(nx + 1) * ny, 0.0);
    f.v.assign(static_cast<std::size_t>(nx) * (ny + 1), 0.0);
    const Domain& dom = grid.domain();

    parallel_for(static_cast<std::size_t>(ny), [&](std::size_t jb, std::size_t je) {
        for (std::size_t j = jb; j < je; ++j) {
            const double cy = grid.center_y(static_cast<int>(j));
            for (int i = 1; i < nx; ++i) {  // interior vertical faces only
                const Vec2 p{dom.x_min + i * grid.hx(), cy};
                const int32_t k = point_label(p, atoms, tess);
                f.u[j * (nx + 1) + i] = atoms.positions[k].x - p.x;
            }
        }
    });
    parallel_for(static_cast<std::size_t>(ny + 1), [&](std::size_t jb, std::size_t je) {
        for (std::size_t j = jb; j < je; ++j) {
            if (j == 0 || j == static_cast<std::size_t>(ny)) continue;  // boundary faces stay 0
            const double fy = dom.y_min + j * grid.hy();
            for (int i = 0; i < nx; ++i) {
                const Vec2 p{grid.center_x(i), fy};
                const int32_t k = point_label(p, atoms, tess);
                f.v[j * nx + i] = atoms.positions[k].y - p.y;
            }
        }
    });
    return f;
}

double cfl_timestep(const Grid& grid, const Density& d, const DiffusionLaw& law,
                    const FaceVelocity& vel, double safety) {
    const double h = std::min(grid.hx(), grid.hy());
    const double pmax = law.pressure_derivative(d.max_value());
    double dt = std::numeric_limits<double>::infinity();
    if (pmax > 0.0) dt = std::min(dt, h * h / (4.0 * pmax));
    const double speed = vel.max_speed();
    if (speed > 0.0) dt = std::min(dt, h / speed);
    return safety * dt;
}

Density step_density(const Density& d, const DiffusionLaw& law, const FaceVelocity& vel,
                     double horizon, double cfl_safety) {
    const Grid& grid = d.grid();
    const int nx = grid.nx(), ny = grid.ny();
    if (vel.nx != nx || vel.ny != ny) throw NumericalError("face velocity grid mismatch");
    if (!(horizon > 0.0)) throw NumericalError("step_density requires horizon > 0");

    Density out = d;
    std::vector<double> pres_row;  // P(rho) for the PME case
    const bool linear = law.kind == DiffusionLaw::Kind::Linear;
    const bool pme2 = !linear && law.m == 2.0;
    std::vector<double> pres(linear ? 0 : grid.cell_count());
    std::vector<double> flux_x(static_cast<std::size_t>(nx + 1));  // one row at a time
    std::vector<double> prev_row_flux_y(static_cast<std::size_t>(nx));
    std::vector<double> row_flux_y(static_cast<std::size_t>(nx));
    std::vector<double> rho_new(grid.cell_count());

    const double inv_hx = 1.0 / grid.hx();
    const double inv_hy = 1.0 / grid.hy();
    const double h = std::min(grid.hx(), grid.hy());
    const double vmax = vel.max_speed();

    double rho_max = out.max_value();
    double t = 0.0;
    while (t < horizon) {
        const double pmax_prime = law.pressure_derivative(rho_max);
        double dt = std::numeric_limits<double>::infinity();
        if (pmax_prime > 0.0) dt = h * h / (4.0 * pmax_prime);
        if (vmax > 0.0) dt = std::min(dt, h / vmax);
        dt = cfl_safety * dt;
        dt = std::min(dt, horizon - t);
        if (!(dt > 0.0) || !std::isfinite(dt)) throw NumericalError("nonfinite state");

        const auto& rho = out.values();
        const double* P = nullptr;
        if (linear) {
            P = rho.data();
        } else {
            if (pme2) {
                for (std::size_t c = 0; c < pres.size(); ++c) pres[c] = rho[c] * rho[c];
            } else {
                for (std::size_t c = 0; c < pres.size(); ++c) pres[c] = std::pow(rho[c], law.m);
            }
            P = pres.data();
        }

        double new_max = 0.0;
        double new_min = std::numeric_limits<double>::infinity();
        bool finite = true;

        // Sweep rows: horizontal fluxes per row, vertical fluxes between this
        // row and the previous one; boundary faces carry zero flux.
        std::fill(prev_row_flux_y.begin(), prev_row_flux_y.end(), 0.0);
        for (int j = 0; j < ny; ++j) {
            const std::size_t row = static_cast<std::size_t>(j) * nx;
            flux_x[0] = 0.0;
            flux_x[nx] = 0.0;
            for (int i = 1; i < nx; ++i) {
                const double u = vel.u[static_cast<std::size_t>(j) * (nx + 1) + i];
                const double up = u >= 0.0 ? rho[row + i - 1] : rho[row + i];
                flux_x[i] = -(P[row + i] - P[row + i - 1]) * inv_hx + up * u;
            }
            if (j + 1 < ny) {
                const std::size_t vrow = static_cast<std::size_t>(j + 1) * nx;
                for (int i = 0; i < nx; ++i) {
                    const double u = vel.v[vrow + i];
                    const double up = u >= 0.0 ? rho[row + i] : rho[row + nx + i];
                    row_flux_y[i] = -(P[row + nx + i] - P[row + i]) * inv_hy + up * u;
                }
            } else {
                std::fill(row_flux_y.begin(), row_flux_y.end(), 0.0);
            }
            for (int i = 0; i < nx; ++i) {
                const double div = (flux_x[i + 1] - flux_x[i]) * inv_hx +
                                   (row_flux_y[i] - prev_row_flux_y[i]) * inv_hy;
                const double v = rho[row + i] - dt * div;
                rho_new[row + i] = v;
                new_max = std::max(new_max, v);
                new_min = std::min(new_min, v);
                finite = finite && std::isfinite(v);
            }
            std::swap(prev_row_flux_y, row_flux_y);
        }

        out.values().swap(rho_new);
        if (!finite) throw NumericalError("nonfinite state");
        if (new_min < -1e-12) throw NumericalError("negative density");
        rho_max = new_max;
        t += dt;
    }
    return out;
}

}  // namespace dynquant
