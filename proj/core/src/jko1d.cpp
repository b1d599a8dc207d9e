#include "dynquant/jko1d.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include "dynquant/io.hpp"
#include "dynquant/rng.hpp"

namespace dynquant {

namespace {

constexpr double kMassEps = 1e-15;

// One matched mass parcel of the monotone (north-west corner) coupling
// between two piecewise-constant densities: over the mass interval of length
// ds both quantile functions are affine.
struct Parcel {
    double ds;        // parcel mass
    double yp, yq;    // quantile positions at the parcel start
    double sp, sq;    // quantile slopes 1/p_i, 1/q_j
};

// Sweeps the monotone coupling of p and q, invoking fn for every parcel.
template <typename Fn>
void sweep_parcels(const Density1D& p, const Density1D& q, Fn&& fn) {
    int i = 0, j = 0;
    double pos_p = 0.0, pos_q = 0.0;
    while (i < p.n && j < q.n) {
        if (!(p.values[i] > 0.0)) {
            ++i;
            pos_p = i * p.h;
            continue;
        }
        if (!(q.values[j] > 0.0)) {
            ++j;
            pos_q = j * q.h;
            continue;
        }
        const double mp = p.values[i] * ((i + 1) * p.h - pos_p);
        const double mq = q.values[j] * ((j + 1) * q.h - pos_q);
        if (mp <= kMassEps) {
            ++i;
            pos_p = i * p.h;
            continue;
        }
        if (mq <= kMassEps) {
            ++j;
            pos_q = j * q.h;
            continue;
        }
        const double ds = std::min(mp, mq);
        fn(Parcel{ds, pos_p, pos_q, 1.0 / p.values[i], 1.0 / q.values[j]});
        pos_p += ds / p.values[i];
        pos_q += ds / q.values[j];
        if (ds == mp) {
            ++i;
            pos_p = i * p.h;
        }
        if (ds == mq) {
            ++j;
            pos_q = j * q.h;
        }
    }
}

}  // namespace

Atoms1D Atoms1D::uniform_weights(std::vector<double> xs) {
    Atoms1D out;
    out.x = std::move(xs);
    out.a.assign(out.x.size(), out.x.empty() ? 0.0 : 1.0 / static_cast<double>(out.x.size()));
    return out;
}

double w2_1d(const Density1D& p, const Density1D& q) {
    KahanSum total;
    sweep_parcels(p, q, [&](const Parcel& pc) {
        const double d0 = pc.yp - pc.yq;
        const double k = pc.sp - pc.sq;
        total.add(pc.ds * (d0 * d0 + d0 * k * pc.ds + k * k * pc.ds * pc.ds / 3.0));
    });
    return total.value();
}

SemiDiscrete1D semidiscrete_1d(const Density1D& p, const Atoms1D& atoms) {
    const std::size_t n = atoms.size();
    SemiDiscrete1D out;
    if (n == 0) {
        out.breakpoints = {0.0, 1.0};
        return out;
    }
    for (std::size_t i = 1; i < n; ++i)
        if (!(atoms.x[i] > atoms.x[i - 1])) throw NumericalError("unsorted atoms");

    // Breakpoints: z_i = F_p^{-1}(sum_{j<=i} a_j), left-continuous quantile.
    out.breakpoints.assign(n + 1, 0.0);
    out.breakpoints[n] = 1.0;
    {
        double cum = 0.0;
        int cell = 0;
        double target_cum = 0.0;
        for (std::size_t i = 0; i + 1 < n; ++i) {
            target_cum += atoms.a[i];
            while (cell < p.n && cum + p.values[cell] * p.h < target_cum - kMassEps) {
                cum += p.values[cell] * p.h;
                ++cell;
            }
            if (cell >= p.n) {
                out.breakpoints[i + 1] = 1.0;
                continue;
            }
            const double v = p.values[cell];
            out.breakpoints[i + 1] =
                v > 0.0 ? cell * p.h + (target_cum - cum) / v : cell * p.h;
            out.breakpoints[i + 1] = std::clamp(out.breakpoints[i + 1], 0.0, 1.0);
        }
    }
    for (std::size_t i = 1; i <= n; ++i)
        out.breakpoints[i] = std::max(out.breakpoints[i], out.breakpoints[i - 1]);

    // Cost and barycenters, integrating cell overlaps in closed form.
    out.barycenters.assign(n, 0.0);
    out.potentials.assign(n, 0.0);
    KahanSum cost;
    for (std::size_t i = 0; i < n; ++i) {
        const double za = out.breakpoints[i], zb = out.breakpoints[i + 1];
        const double xi = atoms.x[i];
        KahanSum seg_mass, seg_first;
        const int c0 = std::max(0, static_cast<int>(std::floor(za / p.h)));
        for (int c = c0; c < p.n; ++c) {
            const double a = std::max(za, c * p.h);
            const double b = std::min(zb, (c + 1) * p.h);
            if (b <= a) {
                if (c * p.h >= zb) break;
                continue;
            }
            const double v = p.values[c];
            if (v <= 0.0) continue;
            const double bc = b - xi, ac = a - xi;
            cost.add(v * (bc * bc * bc - ac * ac * ac) / 6.0);
            seg_mass.add(v * (b - a));
            seg_first.add(v * 0.5 * (b * b - a * a));
        }
        out.barycenters[i] = seg_mass.value() > 0.0 ? seg_first.value() / seg_mass.value() : xi;
    }
    out.cost = cost.value();

    // psi chained from the interface equalities, mean-zero gauge.
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double z = out.breakpoints[i + 1];
        const double d_next = z - atoms.x[i + 1];
        const double d_cur = z - atoms.x[i];
        out.potentials[i + 1] = out.potentials[i] + 0.5 * d_next * d_next - 0.5 * d_cur * d_cur;
    }
    KahanSum psum;
    for (double v : out.potentials) psum.add(v);
    const double mean = psum.value() / static_cast<double>(n);
    for (double& v : out.potentials) v -= mean;
    return out;
}

double internal_energy_1d(const Density1D& p, const DiffusionLaw& law) {
    KahanSum s;
    for (double v : p.values) s.add(law.F(v));
    return s.value() * p.h;
}

double lp_norm_1d(const Density1D& p, double q) {
    if (std::isinf(q)) {
        double m = 0.0;
        for (double v : p.values) m = std::max(m, std::abs(v));
        return m;
    }
    KahanSum s;
    for (double v : p.values) s.add(std::pow(std::abs(v), q));
    return std::pow(s.value() * p.h, 1.0 / q);
}

namespace {

// Kantorovich potential of W_2^2(p_ref, .) at p, evaluated at p's cell
// centers: psi2' (y) = 2 (y - S(y)) with S the monotone map p -> p_ref,
// integrated exactly over parcels.  Cells outside the support carry the last
// cumulative value (their density is zero, so the value is never used).
std::vector<double> prox_potential_at_centers(const Density1D& p, const Density1D& p_ref) {
    std::vector<double> out(p.n, 0.0);
    int next_center = 0;
    double cum = 0.0;
    double last_y = 0.0;
    sweep_parcels(p, p_ref, [&](const Parcel& pc) {
        const double y0 = pc.yp;
        const double y1 = pc.yp + pc.ds * pc.sp;
        // S(y) = yq + (y - y0) * (sq/sp); integrand f(y) = 2 (y - S(y)).
        const double r = pc.sq / pc.sp;
        const double f0 = 2.0 * (y0 - pc.yq);
        const double fslope = 2.0 * (1.0 - r);
        // fill centers that the sweep has passed without covering
        while (next_center < p.n && p.center(next_center) < y0) {
            out[next_center] = cum;
            ++next_center;
        }
        while (next_center < p.n && p.center(next_center) <= y1) {
            const double t = p.center(next_center) - y0;
            out[next_center] = cum + f0 * t + 0.5 * fslope * t * t;
            ++next_center;
        }
        const double len = y1 - y0;
        cum += f0 * len + 0.5 * fslope * len * len;
        last_y = y1;
    });
    (void)last_y;
    while (next_center < p.n) {
        out[next_center] = cum;
        ++next_center;
    }
    return out;
}

// Coupling potential Phi(y) = (1/2)(y - x_i)^2 - psi_i on quantile cell i.
std::vector<double> coupling_potential_at_centers(const Density1D& p, const Atoms1D& atoms,
                                                  const SemiDiscrete1D& sd) {
    std::vector<double> out(p.n, 0.0);
    if (atoms.size() == 0) return out;
    std::size_t cell = 0;
    for (int c = 0; c < p.n; ++c) {
        const double y = p.center(c);
        while (cell + 1 < atoms.size() && y > sd.breakpoints[cell + 1]) ++cell;
        const double d = y - atoms.x[cell];
        out[c] = 0.5 * d * d - sd.potentials[cell];
    }
    return out;
}

struct ObjectiveParts {
    JkoObjective obj;
    SemiDiscrete1D sd;
};

ObjectiveParts evaluate_objective(const Density1D& p, const Atoms1D& x, const Density1D& p_k,
                                  const Atoms1D& x_k, double tau, const DiffusionLaw& law) {
    ObjectiveParts parts;
    parts.sd = semidiscrete_1d(p, x);
    parts.obj.internal = internal_energy_1d(p, law);
    parts.obj.coupling = parts.sd.cost;
    double dx2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = x_k.x[i] - x.x[i];
        dx2 += d * d;
    }
    parts.obj.proximal = (w2_1d(p_k, p) + dx2) / (2.0 * tau);
    parts.obj.value = parts.obj.internal + parts.obj.coupling + parts.obj.proximal;
    return parts;
}

}  // namespace

JkoStepResult jko_step(const Density1D& p_k, const Atoms1D& x_k, double tau,
                       const DiffusionLaw& law, double inner_tol, bool freeze_atoms) {
    if (!(tau > 0.0)) throw ConfigError("jko_step requires tau > 0");
    JkoStepResult res;
    res.p = p_k;
    res.x = x_k;

    ObjectiveParts cur = evaluate_objective(res.p, res.x, p_k, x_k, tau, law);
    double eta = 0.05;
    const int max_outer = 20000;
    int it = 0;

    for (; it < max_outer; ++it) {
        const double j_before = cur.obj.value;

        // (a) damped fixed point on the atoms (first-order condition of the
        // x-block with the current density).
        if (!freeze_atoms && res.x.size() > 0) {
            Atoms1D cand = res.x;
            for (std::size_t i = 0; i < cand.size(); ++i)
                cand.x[i] = (x_k.x[i] + tau * cand.a[i] * cur.sd.barycenters[i]) /
                            (1.0 + tau * cand.a[i]);
            bool sorted = true;
            for (std::size_t i = 1; i < cand.size(); ++i)
                if (!(cand.x[i] > cand.x[i - 1])) sorted = false;
            if (sorted) {
                ObjectiveParts trial = evaluate_objective(res.p, cand, p_k, x_k, tau, law);
                if (trial.obj.value <= cur.obj.value) {
                    res.x = std::move(cand);
                    cur = std::move(trial);
                }
            }
        }

        // (b) entropic mirror descent on the density, backtracked on the
        // objective.
        {
            std::vector<double> grad = coupling_potential_at_centers(res.p, res.x, cur.sd);
            std::vector<double> prox = prox_potential_at_centers(res.p, p_k);
            KahanSum gbar;
            double wsum = 0.0;
            for (int c = 0; c < res.p.n; ++c) {
                grad[c] += law.kind == DiffusionLaw::Kind::Linear
                               ? (res.p.values[c] > 0.0 ? std::log(res.p.values[c]) + 1.0 : 0.0)
                               : law.m / (law.m - 1.0) * std::pow(res.p.values[c], law.m - 1.0);
                grad[c] += prox[c] / (2.0 * tau);
                if (res.p.values[c] > 0.0) {
                    gbar.add(grad[c] * res.p.values[c]);
                    wsum += res.p.values[c];
                }
            }
            const double gmean = wsum > 0.0 ? gbar.value() / wsum : 0.0;

            bool accepted = false;
            double step = eta * 2.0;
            for (int bt = 0; bt < 60 && !accepted; ++bt) {
                Density1D cand = res.p;
                for (int c = 0; c < cand.n; ++c) {
                    if (!(cand.values[c] > 0.0)) continue;
                    double e = -step * (grad[c] - gmean);
                    e = std::clamp(e, -30.0, 30.0);
                    cand.values[c] *= std::exp(e);
                }
                cand.normalize();
                ObjectiveParts trial = evaluate_objective(cand, res.x, p_k, x_k, tau, law);
                if (trial.obj.value < cur.obj.value) {
                    res.p = std::move(cand);
                    cur = std::move(trial);
                    eta = step;
                    accepted = true;
                }
                step *= 0.5;
            }
        }

        const double decrease = j_before - cur.obj.value;
        if (decrease < inner_tol) break;
    }

    res.objective = cur.obj;
    res.inner_iterations = it;
    double dx2 = 0.0;
    for (std::size_t i = 0; i < res.x.size(); ++i) {
        const double d = x_k.x[i] - res.x.x[i];
        dx2 += d * d;
    }
    res.sq_distance = w2_1d(p_k, res.p) + dx2;
    return res;
}

JkoRunResult run_jko1d(const Config& cfg) {
    const int n = cfg.jko_cells;
    Density1D p = [&] {
        switch (cfg.init_density) {
            case InitDensityKind::Uniform: return Density1D::uniform(n);
            case InitDensityKind::Gaussian: {
                Density1D d(n);
                const double inv2s2 = 1.0 / (2.0 * cfg.gaussian_sigma * cfg.gaussian_sigma);
                for (int c = 0; c < n; ++c) {
                    const double dy = d.center(c) - cfg.gaussian_center.x;
                    d.values[c] = std::exp(-dy * dy * inv2s2);
                }
                d.normalize();
                return d;
            }
            case InitDensityKind::File: {
                auto vals = read_density1d_csv(cfg.density_file);
                if (static_cast<int>(vals.size()) != n)
                    throw ConfigError("1d density file size does not match jko_cells");
                Density1D d(n);
                d.values = vals;
                d.normalize();
                return d;
            }
        }
        throw ConfigError("unreachable init_density");
    }();

    Atoms1D atoms;
    if (!cfg.atoms_1d.empty()) {
        std::vector<double> xs = cfg.atoms_1d;
        for (double x : xs)
            if (!(x > 0.0 && x < 1.0)) throw ConfigError("atoms_1d positions must lie in (0,1)");
        std::sort(xs.begin(), xs.end());
        atoms = Atoms1D::uniform_weights(std::move(xs));
    } else {
        Rng rng(cfg.seed);
        const double margin = 0.05;
        const double min_sep = 0.5 / static_cast<double>(cfg.n_atoms);
        std::vector<double> xs;
        long attempts = 0;
        while (static_cast<int>(xs.size()) < cfg.n_atoms) {
            if (++attempts > 20000L * cfg.n_atoms)
                throw ConfigError("could not place 1d atoms at the required spacing");
            const double x = rng.uniform(margin, 1.0 - margin);
            bool ok = true;
            for (double q : xs)
                if (std::abs(q - x) < min_sep) {
                    ok = false;
                    break;
                }
            if (ok) xs.push_back(x);
        }
        std::sort(xs.begin(), xs.end());
        atoms = Atoms1D::uniform_weights(std::move(xs));
    }

    const DiffusionLaw law =
        cfg.diffusion_linear ? DiffusionLaw::linear() : DiffusionLaw::porous_medium(cfg.m);
    const MassCostLaw mass_cost(cfg.g_kappa, cfg.g_beta);

    std::filesystem::create_directories(cfg.out_dir);

    auto diagnostics = [&](long step, const Density1D& d, const Atoms1D& x) {
        DiagnosticsRow row;
        row.step = step;
        row.time = step * cfg.tau;
        SemiDiscrete1D sd = semidiscrete_1d(d, x);
        row.e.internal = internal_energy_1d(d, law);
        KahanSum gs;
        for (double a : x.a) gs.add(mass_cost.g(a));
        row.e.mass_cost = gs.value();
        row.e.transport = sd.cost;
        row.e.total = row.e.internal + row.e.mass_cost + row.e.transport;
        double max_db = 0.0;
        double min_xx = std::numeric_limits<double>::infinity();
        double min_bb = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < x.size(); ++i) {
            max_db = std::max(max_db, std::abs(x.x[i] - sd.barycenters[i]));
            if (i + 1 < x.size()) {
                min_xx = std::min(min_xx, x.x[i + 1] - x.x[i]);
                min_bb = std::min(min_bb, sd.barycenters[i + 1] - sd.barycenters[i]);
            }
        }
        row.e.max_dist_to_barycenter = max_db;
        row.e.min_pairwise_atom_dist = min_xx;
        row.e.min_pairwise_barycenter_dist = min_bb;
        row.e.mass_error = std::abs(d.mass() - 1.0);
        row.e.linf_density = *std::max_element(d.values.begin(), d.values.end());
        row.alive_count = static_cast<long>(x.size());
        row.clamp_events = 0;
        row.gibbs_l1 = std::numeric_limits<double>::quiet_NaN();  // not meaningful in 1d
        return row;
    };

    JkoRunResult out;
    out.series.push_back(diagnostics(0, p, atoms));
    out.initial_energy = out.series.front().e.total;
    write_density1d_csv(cfg.out_dir + "/density1d_000000.csv", p.values);

    for (long k = 1; k <= cfg.steps; ++k) {
        JkoStepResult step =
            jko_step(p, atoms, cfg.tau, law, cfg.jko_inner_tol, cfg.jko_freeze_atoms);
        p = std::move(step.p);
        atoms = std::move(step.x);
        out.step_sq_distances.push_back(step.sq_distance);
        out.series.push_back(diagnostics(k, p, atoms));
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%06ld", k);
        write_density1d_csv(cfg.out_dir + "/density1d_" + buf + ".csv", p.values);
    }

    std::ofstream series(cfg.out_dir + "/series.csv");
    series << series_csv_header() << '\n';
    for (const auto& row : out.series) series << series_csv_line(row) << '\n';

    out.p = std::move(p);
    out.x = std::move(atoms);
    return out;
}

}  // namespace dynquant
