#include "dynquant/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "dynquant/io.hpp"
#include "dynquant/rng.hpp"

namespace dynquant {

DynamicsConfig DynamicsConfig::from(const Config& cfg) {
    DynamicsConfig d;
    d.mode = cfg.mode;
    d.tau = cfg.tau;
    d.alpha = cfg.resolved_alpha();
    d.law = cfg.diffusion_linear ? DiffusionLaw::linear() : DiffusionLaw::porous_medium(cfg.m);
    d.mass_cost = MassCostLaw(cfg.g_kappa, cfg.g_beta);
    d.a_min = cfg.a_min;
    d.psi_sign = cfg.psi_sign;
    d.ot_tol = cfg.ot_tol;
    d.ot_max_iter = cfg.ot_max_iter;
    d.cfl_safety = cfg.cfl_safety;
    return d;
}

namespace {

Tessellation solve_for(const Density& density, const AtomSet& atoms, const DynamicsConfig& cfg,
                       const std::vector<double>& warm) {
    SolveOptions opt;
    opt.tol = cfg.ot_tol;
    opt.max_iter = cfg.ot_max_iter;
    opt.warm_potentials = warm;
    return solve_potentials(density, atoms, opt);
}

// Weight dynamics of full mode: explicit Euler on
//   da_i/dt = -(g'(a_i) + psi_i) + c   (el sign; intro flips psi)
// with c the alive-mean making the rates sum to zero, sub-stepped so no
// weight moves by more than half its value, absorbing deaths at a_min.
void advance_weights(AtomSet& atoms, const std::vector<double>& psi, const DynamicsConfig& cfg) {
    double remaining = cfg.tau;
    int guard = 0;
    while (remaining > 0.0) {
        if (++guard > 100000) throw NumericalError("weight sub-stepping did not terminate");
        std::vector<std::size_t> alive_ids;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (atoms.alive[i]) alive_ids.push_back(i);
        if (alive_ids.empty()) throw NumericalError("all atoms dead");
        if (alive_ids.size() == 1) return;  // single atom holds the whole mass

        std::vector<double> rate(alive_ids.size());
        KahanSum mean;
        for (std::size_t k = 0; k < alive_ids.size(); ++k) {
            const std::size_t i = alive_ids[k];
            const double gp = cfg.mass_cost.g_prime(atoms.weights[i]);
            const double r = cfg.psi_sign == PsiSign::EulerLagrange ? -(gp + psi[i])
                                                                    : -gp + psi[i];
            rate[k] = r;
            mean.add(r);
        }
        const double c = mean.value() / static_cast<double>(alive_ids.size());
        double dt = remaining;
        for (std::size_t k = 0; k < alive_ids.size(); ++k) {
            rate[k] -= c;
            if (rate[k] < 0.0) {
                const double cap = 0.5 * atoms.weights[alive_ids[k]] / (-rate[k]);
                dt = std::min(dt, cap);
            }
        }

        bool any_death = false;
        for (std::size_t k = 0; k < alive_ids.size(); ++k) {
            const std::size_t i = alive_ids[k];
            atoms.weights[i] += dt * rate[k];
            if (atoms.weights[i] <= cfg.a_min) {
                atoms.weights[i] = 0.0;
                atoms.alive[i] = 0;
                any_death = true;
            }
        }
        // renormalize survivors to the simplex
        KahanSum total;
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (atoms.alive[i]) total.add(atoms.weights[i]);
        if (!(total.value() > 0.0)) throw NumericalError("all atoms dead");
        const double inv = 1.0 / total.value();
        for (std::size_t i = 0; i < atoms.size(); ++i)
            if (atoms.alive[i]) atoms.weights[i] *= inv;
        (void)any_death;

        remaining -= dt;
        if (remaining < 1e-15 * cfg.tau) break;
    }
}

}  // namespace

SimState make_initial_state(Density density, AtomSet atoms, const DynamicsConfig& cfg) {
    SimState s;
    s.tess = solve_for(density, atoms, cfg, {});
    s.density = std::move(density);
    s.atoms = std::move(atoms);
    return s;
}

SimState splitting_step(const SimState& state, const DynamicsConfig& cfg) {
    const Grid& grid = state.density.grid();
    SimState next;
    next.time = state.time + cfg.tau;
    next.step = state.step + 1;
    next.clamp_events = state.clamp_events;
    next.atoms = state.atoms;

    // (1) the tessellation of the incoming state is state.tess (solved at the
    // end of the previous step / at initialization).

    // (2) explicit Euler on the atom positions, clamped to the domain.
    //     full mode follows the mass-weighted gradient a_i (x_i - b_i);
    //     quantization/lloyd integrate the velocity-scaled specialization
    //     dx/dt = alpha (b - x).
    const Domain& dom = grid.domain();
    for (std::size_t i = 0; i < next.atoms.size(); ++i) {
        if (!next.atoms.alive[i]) continue;
        const Vec2 to_b = state.atoms.positions[i] - state.tess.barycenters[i];
        const double factor = cfg.mode == SimMode::Full
                                  ? cfg.alpha * cfg.tau * state.tess.masses[i]
                                  : cfg.alpha * cfg.tau;
        Vec2 moved = state.atoms.positions[i] - factor * to_b;
        Vec2 clamped = dom.clamp(moved);
        if (clamped.x != moved.x || clamped.y != moved.y) ++next.clamp_events;
        next.atoms.positions[i] = clamped;
    }

    // (3) weight dynamics with absorbing deaths (full mode only).
    if (cfg.mode == SimMode::Full)
        advance_weights(next.atoms, state.tess.potentials, cfg);
    if (next.atoms.alive_count() == 0) throw NumericalError("all atoms dead");

    // (4) re-solve for the moved atoms, freeze the advection, advance the PDE.
    Tessellation tess_mid = solve_for(state.density, next.atoms, cfg, state.tess.potentials);
    if (cfg.mode == SimMode::Lloyd) {
        next.density = state.density;
        next.tess = std::move(tess_mid);
        return next;
    }
    FaceVelocity vel = face_velocities(grid, next.atoms, tess_mid);
    next.density = step_density(state.density, cfg.law, vel, cfg.tau, cfg.cfl_safety);

    // (5) tessellation of the advanced state (doubles as the next step's OT solve).
    next.tess = solve_for(next.density, next.atoms, cfg, tess_mid.potentials);
    return next;
}

EnergyBreakdown energy(const SimState& state, const DynamicsConfig& cfg) {
    EnergyBreakdown e;
    e.internal = internal_energy(state.density, cfg.law);
    KahanSum gsum;
    for (std::size_t i = 0; i < state.atoms.size(); ++i)
        if (state.atoms.alive[i]) gsum.add(cfg.mass_cost.g(state.atoms.weights[i]));
    e.mass_cost = gsum.value();
    e.transport = transport_cost(state.density, state.atoms, state.tess);
    e.total = e.internal + e.mass_cost + e.transport;

    double max_db = 0.0;
    for (std::size_t i = 0; i < state.atoms.size(); ++i) {
        if (!state.atoms.alive[i] || state.tess.empty_cell[i]) continue;
        max_db = std::max(max_db, dist(state.atoms.positions[i], state.tess.barycenters[i]));
    }
    e.max_dist_to_barycenter = max_db;
    e.min_pairwise_atom_dist = state.atoms.min_pairwise_distance();

    double min_bb = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < state.atoms.size(); ++i) {
        if (!state.atoms.alive[i] || state.tess.empty_cell[i]) continue;
        for (std::size_t j = i + 1; j < state.atoms.size(); ++j) {
            if (!state.atoms.alive[j] || state.tess.empty_cell[j]) continue;
            min_bb = std::min(min_bb, dist(state.tess.barycenters[i], state.tess.barycenters[j]));
        }
    }
    e.min_pairwise_barycenter_dist = min_bb;
    e.mass_error = std::abs(total_mass(state.density) - 1.0);
    e.linf_density = state.density.max_value();
    return e;
}

Density gibbs_profile(const Grid& grid, const AtomSet& atoms, const Tessellation& tess) {
    Density g(grid);
    for (int j = 0; j < grid.ny(); ++j) {
        const double cy = grid.center_y(j);
        for (int i = 0; i < grid.nx(); ++i) {
            const std::size_t c = grid.index(i, j);
            const int32_t k = tess.labels[c];
            const double dx = grid.center_x(i) - atoms.positions[k].x;
            const double dy = cy - atoms.positions[k].y;
            g[c] = std::exp(-(0.5 * (dx * dx + dy * dy) - tess.potentials[k]));
        }
    }
    g.normalize();
    return g;
}

double gibbs_l1_distance(const Density& density, const AtomSet& atoms, const Tessellation& tess) {
    Density g = gibbs_profile(density.grid(), atoms, tess);
    KahanSum s;
    for (std::size_t c = 0; c < g.values().size(); ++c)
        s.add(std::abs(density[c] - g[c]));
    return s.value() * density.grid().cell_area();
}

std::vector<Vec2> sample_atoms(const Domain& domain, int n, uint64_t seed, double margin) {
    Rng rng(seed);
    const double min_dist = 0.5 * std::min(domain.width(), domain.height()) /
                            std::sqrt(static_cast<double>(n));
    const double x0 = domain.x_min + margin, x1 = domain.x_max - margin;
    const double y0 = domain.y_min + margin, y1 = domain.y_max - margin;
    if (!(x0 < x1) || !(y0 < y1)) throw ConfigError("atom margin leaves no room in the domain");

    std::vector<Vec2> pts;
    pts.reserve(n);
    long attempts = 0;
    const long max_attempts = 20000L * n;
    while (static_cast<int>(pts.size()) < n) {
        if (++attempts > max_attempts)
            throw ConfigError("init_atoms random: could not place atoms at the required spacing");
        Vec2 p{rng.uniform(x0, x1), rng.uniform(y0, y1)};
        bool ok = true;
        for (const Vec2& q : pts)
            if (dist(p, q) < min_dist) {
                ok = false;
                break;
            }
        if (ok) pts.push_back(p);
    }
    return pts;
}

std::string series_csv_header() {
    return "step,time,energy_total,energy_internal,energy_mass,energy_transport,"
           "max_dist_to_barycenter,min_pairwise_atom_dist,min_pairwise_barycenter_dist,"
           "mass_error,linf_density,alive_count,clamp_events,gibbs_l1_distance";
}

std::string series_csv_line(const DiagnosticsRow& row) {
    auto num = [](double v) { return std::isfinite(v) ? format_double(v) : std::string(); };
    std::string s;
    s += std::to_string(row.step);
    s += ',';
    s += format_double(row.time);
    s += ',';
    s += num(row.e.total);
    s += ',';
    s += num(row.e.internal);
    s += ',';
    s += num(row.e.mass_cost);
    s += ',';
    s += num(row.e.transport);
    s += ',';
    s += num(row.e.max_dist_to_barycenter);
    s += ',';
    s += num(row.e.min_pairwise_atom_dist);
    s += ',';
    s += num(row.e.min_pairwise_barycenter_dist);
    s += ',';
    s += num(row.e.mass_error);
    s += ',';
    s += num(row.e.linf_density);
    s += ',';
    s += std::to_string(row.alive_count);
    s += ',';
    s += std::to_string(row.clamp_events);
    s += ',';
    s += num(row.gibbs_l1);
    return s;
}

namespace {

std::string zero_pad(long v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06ld", v);
    return buf;
}

DiagnosticsRow diagnostics_for(const SimState& s, const DynamicsConfig& cfg) {
    DiagnosticsRow row;
    row.step = s.step;
    row.time = s.time;
    row.e = energy(s, cfg);
    row.alive_count = static_cast<long>(s.atoms.alive_count());
    row.clamp_events = s.clamp_events;
    row.gibbs_l1 = gibbs_l1_distance(s.density, s.atoms, s.tess);
    return row;
}

void write_snapshot(const std::string& dir, const SimState& s) {
    write_density_csv(dir + "/density_" + zero_pad(s.step) + ".csv", s.density);
    write_atoms_csv(dir + "/atoms_" + zero_pad(s.step) + ".csv", s.atoms, &s.tess);
}

}  // namespace

RunResult run_simulation(const Config& cfg) {
    if (cfg.mode == SimMode::Jko1d)
        throw ConfigError("run_simulation handles 2d modes; use the jko1d driver");
    const Grid grid(cfg.domain, cfg.nx, cfg.ny);

    Density density = [&] {
        switch (cfg.init_density) {
            case InitDensityKind::Uniform: return Density::uniform(grid);
            case InitDensityKind::Gaussian:
                return Density::gaussian(grid, cfg.gaussian_center, cfg.gaussian_sigma);
            case InitDensityKind::File: {
                Density d = read_density_csv(cfg.density_file, grid);
                if (std::abs(total_mass(d) - 1.0) > 1e-6)
                    throw ConfigError("init_density file: density mass is not 1");
                for (double v : d.values())
                    if (v < 0.0) throw ConfigError("init_density file: negative value");
                d.normalize();
                return d;
            }
        }
        throw ConfigError("unreachable init_density");
    }();

    AtomSet atoms;
    const double interior_margin = 2.0 * std::max(grid.hx(), grid.hy());
    if (cfg.init_atoms == InitAtomsKind::Random) {
        const double margin = std::max(0.05 * cfg.domain.diam(), interior_margin);
        atoms = AtomSet::uniform_weights(
            sample_atoms(cfg.domain, cfg.n_atoms, cfg.seed, margin));
    } else {
        atoms = read_atoms_csv(cfg.atoms_file);
        if (atoms.size() == 0) throw ConfigError("init_atoms file: no atoms");
        if (cfg.mode == SimMode::Full) {
            double sum = atoms.weight_sum();
            if (!(sum > 0.0) || std::abs(sum - 1.0) > 1e-6)
                throw ConfigError("init_atoms file: alive weights must sum to 1");
            for (std::size_t i = 0; i < atoms.size(); ++i)
                if (atoms.alive[i]) atoms.weights[i] /= sum;
        } else {
            const double n_alive = static_cast<double>(atoms.alive_count());
            for (std::size_t i = 0; i < atoms.size(); ++i)
                atoms.weights[i] = atoms.alive[i] ? 1.0 / n_alive : 0.0;
        }
    }
    for (std::size_t i = 0; i < atoms.size(); ++i)
        for (std::size_t j = i + 1; j < atoms.size(); ++j)
            if (atoms.alive[i] && atoms.alive[j] &&
                atoms.positions[i].x == atoms.positions[j].x &&
                atoms.positions[i].y == atoms.positions[j].y)
                throw ConfigError("initial atoms must be pairwise distinct");

    // Interiority margin of 2 cells per axis, capped so degenerate (thin-strip)
    // grids keep an admissible interior.
    const double mx = std::min(2.0 * grid.hx(), 0.4 * cfg.domain.width());
    const double my = std::min(2.0 * grid.hy(), 0.4 * cfg.domain.height());
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!atoms.alive[i]) continue;
        const Vec2& p = atoms.positions[i];
        if (p.x < cfg.domain.x_min + mx || p.x > cfg.domain.x_max - mx ||
            p.y < cfg.domain.y_min + my || p.y > cfg.domain.y_max - my)
            throw ConfigError("initial atoms must be strictly interior (margin 2*max(hx,hy))");
    }

    const DynamicsConfig dcfg = DynamicsConfig::from(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    {
        std::ofstream g(cfg.out_dir + "/grid.txt");
        g << cfg.nx << ' ' << cfg.ny << ' ' << format_double(cfg.domain.x_min) << ' '
          << format_double(cfg.domain.x_max) << ' ' << format_double(cfg.domain.y_min) << ' '
          << format_double(cfg.domain.y_max) << '\n';
    }

    RunResult result;
    SimState state = make_initial_state(std::move(density), std::move(atoms), dcfg);
    result.series.push_back(diagnostics_for(state, dcfg));
    write_snapshot(cfg.out_dir, state);

    for (long k = 1; k <= cfg.steps; ++k) {
        state = splitting_step(state, dcfg);
        result.series.push_back(diagnostics_for(state, dcfg));
        if (k % cfg.snapshot_every == 0 || k == cfg.steps) write_snapshot(cfg.out_dir, state);
    }

    std::ofstream series(cfg.out_dir + "/series.csv");
    if (!series) throw ConfigError("cannot open for writing: " + cfg.out_dir + "/series.csv");
    series << series_csv_header() << '\n';
    for (const auto& row : result.series) series << series_csv_line(row) << '\n';
    series.close();

    result.state = std::move(state);
    return result;
}

}  // namespace dynquant
