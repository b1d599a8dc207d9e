#include "dynquant/sdot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>

#include "dynquant/parallel.hpp"

namespace dynquant {

namespace {

// Alive atoms in struct-of-arrays form, in increasing original index, so the
// lowest-original-index tie rule coincides with strict-less scanning order.
struct AliveView {
    std::vector<double> x, y, psi;
    std::vector<double> a;
    std::vector<int32_t> id;

    static AliveView make(const AtomSet& atoms, const std::vector<double>& potentials) {
        AliveView v;
        for (std::size_t i = 0; i < atoms.size(); ++i) {
            if (!atoms.alive[i]) continue;
            v.x.push_back(atoms.positions[i].x);
            v.y.push_back(atoms.positions[i].y);
            v.psi.push_back(potentials.empty() ? 0.0 : potentials[i]);
            v.a.push_back(atoms.weights[i]);
            v.id.push_back(static_cast<int32_t>(i));
        }
        return v;
    }

    std::size_t size() const { return id.size(); }
};

void check_alive_distinct(const AtomSet& atoms) {
    std::size_t n_alive = atoms.alive_count();
    if (n_alive == 0) throw NumericalError("empty atomic measure");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        if (!atoms.alive[i]) continue;
        for (std::size_t j = i + 1; j < atoms.size(); ++j) {
            if (!atoms.alive[j]) continue;
            if (atoms.positions[i].x == atoms.positions[j].x &&
                atoms.positions[i].y == atoms.positions[j].y)
                throw NumericalError("coincident alive atoms");
        }
    }
}

// Per-cell argmin over alive atoms; optionally records the minimal cost.
void assign_impl(const Grid& grid, const AliveView& v, std::vector<int32_t>& labels_alive,
                 std::vector<double>* min_cost) {
    const std::size_t n_cells = grid.cell_count();
    labels_alive.resize(n_cells);
    if (min_cost) min_cost->resize(n_cells);
    const int nx = grid.nx();
    const std::size_t n_atoms = v.size();

    parallel_for(n_cells, [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const int i = static_cast<int>(c % nx);
            const int j = static_cast<int>(c / nx);
            const double cx = grid.center_x(i);
            const double cy = grid.center_y(j);
            double best = std::numeric_limits<double>::infinity();
            int32_t best_k = 0;
            for (std::size_t k = 0; k < n_atoms; ++k) {
                const double dx = cx - v.x[k];
                const double dy = cy - v.y[k];
                const double cost = 0.5 * (dx * dx + dy * dy) - v.psi[k];
                if (cost < best) {
                    best = cost;
                    best_k = static_cast<int32_t>(k);
                }
            }
            labels_alive[c] = best_k;
            if (min_cost) (*min_cost)[c] = best;
        }
    });
}

struct DualEval {
    double dual = 0.0;
    double residual = 0.0;
    std::vector<double> masses;  // alive-indexed
};

DualEval evaluate_dual(const Grid& grid, const std::vector<double>& rho, const AliveView& v,
                       std::vector<int32_t>& labels_scratch, std::vector<double>& cost_scratch) {
    assign_impl(grid, v, labels_scratch, &cost_scratch);
    DualEval out;
    out.masses.assign(v.size(), 0.0);
    std::vector<double> carry(v.size(), 0.0);
    KahanSum integral;
    for (std::size_t c = 0; c < rho.size(); ++c) {
        const double w = rho[c];
        const int32_t k = labels_scratch[c];
        // masses with per-atom compensation
        double yv = w - carry[k];
        double t = out.masses[k] + yv;
        carry[k] = (t - out.masses[k]) - yv;
        out.masses[k] = t;
        integral.add(cost_scratch[c] * w);
    }
    const double area = grid.cell_area();
    KahanSum dual;
    dual.add(integral.value() * area);
    for (std::size_t k = 0; k < v.size(); ++k) {
        out.masses[k] *= area;
        dual.add(v.a[k] * v.psi[k]);
        out.residual = std::max(out.residual, std::abs(out.masses[k] - v.a[k]));
    }
    out.dual = dual.value();
    return out;
}

void project_mean_zero(std::vector<double>& psi) {
    if (psi.empty()) return;
    KahanSum s;
    for (double p : psi) s.add(p);
    const double mean = s.value() / static_cast<double>(psi.size());
    for (double& p : psi) p -= mean;
}

}  // namespace

double default_sdot_tolerance(const Density& density) {
    return std::max(1e-7, 0.5 * density.grid().cell_area() * density.max_value());
}

std::vector<int32_t> assign_cells(const Grid& grid, const AtomSet& atoms,
                                  const std::vector<double>& potentials) {
    if (atoms.alive_count() == 0) throw NumericalError("empty atomic measure");
    AliveView v = AliveView::make(atoms, potentials);
    std::vector<int32_t> labels_alive;
    assign_impl(grid, v, labels_alive, nullptr);
    std::vector<int32_t> labels(labels_alive.size());
    for (std::size_t c = 0; c < labels.size(); ++c) labels[c] = v.id[labels_alive[c]];
    return labels;
}

std::vector<double> cell_masses(const Density& density, const std::vector<int32_t>& labels,
                                std::size_t n_atoms) {
    std::vector<double> masses(n_atoms, 0.0);
    std::vector<double> carry(n_atoms, 0.0);
    const auto& v = density.values();
    for (std::size_t c = 0; c < v.size(); ++c) {
        const int32_t k = labels[c];
        double y = v[c] - carry[k];
        double t = masses[k] + y;
        carry[k] = (t - masses[k]) - y;
        masses[k] = t;
    }
    const double area = density.grid().cell_area();
    for (double& m : masses) m *= area;
    return masses;
}

std::vector<Vec2> barycenters(const Density& density, const AtomSet& atoms,
                              const std::vector<int32_t>& labels,
                              std::vector<uint8_t>* empty_flags) {
    const std::size_t n = atoms.size();
    std::vector<double> wsum(n, 0.0), xsum(n, 0.0), ysum(n, 0.0);
    const Grid& grid = density.grid();
    const auto& v = density.values();
    for (int j = 0; j < grid.ny(); ++j) {
        const double cy = grid.center_y(j);
        for (int i = 0; i < grid.nx(); ++i) {
            const std::size_t c = grid.index(i, j);
            const double w = v[c];
            const int32_t k = labels[c];
            wsum[k] += w;
            xsum[k] += w * grid.center_x(i);
            ysum[k] += w * cy;
        }
    }
    std::vector<Vec2> b(n);
    if (empty_flags) empty_flags->assign(n, 0);
    for (std::size_t k = 0; k < n; ++k) {
        if (wsum[k] > 0.0) {
            b[k] = {xsum[k] / wsum[k], ysum[k] / wsum[k]};
        } else {
            b[k] = atoms.positions[k];
            if (empty_flags) (*empty_flags)[k] = 1;
        }
    }
    return b;
}

Tessellation solve_potentials(const Density& density, const AtomSet& atoms,
                              const SolveOptions& options) {
    check_alive_distinct(atoms);
    const Grid& grid = density.grid();

    // Density floor: every positive-weight atom must be able to acquire mass.
    std::vector<double> rho = density.values();
    const double floor = 1e-12 / grid.cell_area();
    for (double& v : rho) v = std::max(v, floor);
    {
        KahanSum s;
        for (double v : rho) s.add(v);
        const double inv = 1.0 / (s.value() * grid.cell_area());
        for (double& v : rho) v *= inv;
    }
    double rho_max = 0.0;
    for (double v : rho) rho_max = std::max(rho_max, v);

    Density floored(grid, std::move(rho));
    const double tol =
        options.tol > 0.0 ? options.tol : std::max(1e-7, 0.5 * grid.cell_area() * rho_max);

    AliveView v = AliveView::make(atoms, options.warm_potentials);
    project_mean_zero(v.psi);
    const std::size_t n = v.size();

    std::vector<int32_t> labels_scratch;
    std::vector<double> cost_scratch;
    DualEval cur = evaluate_dual(grid, floored.values(), v, labels_scratch, cost_scratch);

    std::vector<double> best_psi = v.psi;
    DualEval best = cur;

    // Mass resolution below a couple of cells' content is not representable
    // with per-cell labels, so the grid-quantization floor bounds the
    // achievable residual from below.
    const double quantization_floor = 2.0 * grid.cell_area() * rho_max;
    const double effective_tol = std::max(tol, quantization_floor);

    const double diam2 = grid.domain().diam() * grid.domain().diam();
    std::vector<double> grad(n), prev_psi, prev_grad;
    double sigma = 0.0;
    bool stalled = false;
    int tiny_improvements = 0;
    int iter = 0;

    for (; iter < options.max_iter && cur.residual > effective_tol; ++iter) {
        double gg = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            grad[k] = v.a[k] - cur.masses[k];
            gg += grad[k] * grad[k];
        }
        if (gg == 0.0) break;

        if (!prev_psi.empty()) {
            // Barzilai-Borwein spectral step; the dual is concave so the
            // denominator is nonnegative, zero on flat (piecewise-affine) spans.
            double dpsi_dpsi = 0.0, dpsi_dg = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double dp = v.psi[k] - prev_psi[k];
                const double dg = grad[k] - prev_grad[k];
                dpsi_dpsi += dp * dp;
                dpsi_dg += dp * dg;
            }
            if (dpsi_dg < 0.0) sigma = dpsi_dpsi / (-dpsi_dg);
            else sigma *= 2.0;
        } else {
            sigma = 0.05 * diam2 / std::sqrt(gg);
        }
        sigma = std::clamp(sigma, 1e-14, 1e6);

        prev_psi = v.psi;
        prev_grad = grad;

        const double c1 = 1e-4;
        const double improve_floor = 1e-13 * (1.0 + std::abs(cur.dual));
        bool accepted = false;
        std::vector<double> fallback_psi;
        DualEval fallback;
        bool have_fallback = false;

        const double dual_before = cur.dual;
        double step = sigma;
        for (int bt = 0; bt < 40; ++bt) {
            std::vector<double> cand_psi = prev_psi;
            for (std::size_t k = 0; k < n; ++k) cand_psi[k] += step * grad[k];
            project_mean_zero(cand_psi);
            AliveView cand_view = v;
            cand_view.psi = cand_psi;
            DualEval cand = evaluate_dual(grid, floored.values(), cand_view, labels_scratch,
                                          cost_scratch);
            if (cand.dual >= cur.dual + c1 * step * gg) {
                v.psi = std::move(cand_psi);
                cur = std::move(cand);
                accepted = true;
                break;
            }
            if (cand.dual > cur.dual + improve_floor &&
                (!have_fallback || cand.dual > fallback.dual)) {
                fallback_psi = std::move(cand_psi);
                fallback = std::move(cand);
                have_fallback = true;
            }
            step *= 0.5;
        }
        if (!accepted && have_fallback) {
            v.psi = std::move(fallback_psi);
            cur = std::move(fallback);
            accepted = true;
        }
        if (!accepted) {
            // Line search cannot improve the dual beyond machine tolerance:
            // we are at a vertex of the grid-discretized (piecewise-affine) dual.
            stalled = true;
            break;
        }
        // accepted ascent steps never decrease the dual
        if (cur.dual < dual_before)
            throw std::logic_error("sdot dual decreased on an accepted step");
        // Consecutive near-zero gains mean the ascent is hopping between
        // adjacent vertices of the piecewise-affine dual; treat as a stall.
        if (cur.dual - dual_before < 1e-11 * (1.0 + std::abs(dual_before))) {
            if (++tiny_improvements >= 3) {
                stalled = true;
                ++iter;
                break;
            }
        } else {
            tiny_improvements = 0;
        }
        if (cur.dual > best.dual) {
            best = cur;
            best_psi = v.psi;
        }
    }
    if (cur.dual > best.dual) {
        best = cur;
        best_psi = v.psi;
    }

    bool converged = best.residual <= effective_tol;
    if (stalled && !converged && best.residual > std::max(0.02, 1e3 * tol))
        throw NumericalError("solver stalled");

    // Final assignment and per-atom quantities at the best iterate, reported
    // against the caller's (unfloored) density.
    AliveView bestv = v;
    bestv.psi = best_psi;
    std::vector<int32_t> labels_alive;
    assign_impl(grid, bestv, labels_alive, nullptr);

    Tessellation out;
    out.labels.resize(labels_alive.size());
    for (std::size_t c = 0; c < labels_alive.size(); ++c)
        out.labels[c] = bestv.id[labels_alive[c]];
    out.potentials.assign(atoms.size(), 0.0);
    for (std::size_t k = 0; k < n; ++k) out.potentials[bestv.id[k]] = best_psi[k];

    out.masses = cell_masses(density, out.labels, atoms.size());
    out.barycenters = barycenters(density, atoms, out.labels, &out.empty_cell);
    out.converged = converged;
    out.residual = best.residual;
    out.iterations = iter;
    out.dual_value = best.dual;
    return out;
}

double transport_cost(const Density& density, const AtomSet& atoms, const Tessellation& tess) {
    const Grid& grid = density.grid();
    const auto& v = density.values();
    KahanSum integral;
    for (int j = 0; j < grid.ny(); ++j) {
        const double cy = grid.center_y(j);
        for (int i = 0; i < grid.nx(); ++i) {
            const std::size_t c = grid.index(i, j);
            const int32_t k = tess.labels[c];
            const double dx = grid.center_x(i) - atoms.positions[k].x;
            const double dy = cy - atoms.positions[k].y;
            integral.add((0.5 * (dx * dx + dy * dy) - tess.potentials[k]) * v[c]);
        }
    }
    KahanSum total;
    total.add(integral.value() * grid.cell_area());
    for (std::size_t k = 0; k < atoms.size(); ++k)
        if (atoms.alive[k]) total.add(atoms.weights[k] * tess.potentials[k]);
    return total.value();
}

std::vector<Vec2> atom_gradient(const AtomSet& atoms, const Tessellation& tess) {
    std::vector<Vec2> g(atoms.size());
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        if (!atoms.alive[k]) continue;
        g[k] = tess.masses[k] * (atoms.positions[k] - tess.barycenters[k]);
    }
    return g;
}

PotentialField potential_field(const Grid& grid, const AtomSet& atoms, const Tessellation& tess) {
    PotentialField f;
    f.phi.resize(grid.cell_count());
    f.grad.resize(grid.cell_count());
    parallel_for(grid.cell_count(), [&](std::size_t begin, std::size_t end) {
        for (std::size_t c = begin; c < end; ++c) {
            const int i = static_cast<int>(c % grid.nx());
            const int j = static_cast<int>(c / grid.nx());
            const int32_t k = tess.labels[c];
            const Vec2 d = grid.cell_center(i, j) - atoms.positions[k];
            f.phi[c] = 0.5 * d.norm2() - tess.potentials[k];
            f.grad[c] = d;
        }
    });
    return f;
}

double AtomSet::min_pairwise_distance() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < size(); ++i) {
        if (!alive[i]) continue;
        for (std::size_t j = i + 1; j < size(); ++j) {
            if (!alive[j]) continue;
            best = std::min(best, dist(positions[i], positions[j]));
        }
    }
    return best;
}

}  // namespace dynquant
