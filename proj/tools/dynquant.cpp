// dynquant: simulate / jko1d / render / selftest command-line front end.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>

#include "dynquant/dynamics.hpp"
#include "dynquant/io.hpp"
#include "dynquant/jko1d.hpp"
#include "dynquant/metrics.hpp"
#include "dynquant/render.hpp"
#include "dynquant/rng.hpp"

namespace {

using namespace dynquant;

int run_selftest() {
    int failures = 0;
    auto check = [&](bool ok, const std::string& name) {
        std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name.c_str());
        if (!ok) ++failures;
    };

    // grid reductions against closed forms
    {
        Grid g(Domain(0, 1, 0, 1), 64, 64);
        Density d = Density::uniform(g);
        check(std::abs(total_mass(d) - 1.0) < 1e-12, "total_mass(uniform) == 1");
        check(std::abs(internal_energy(d, DiffusionLaw::linear())) < 1e-12,
              "entropy(uniform on unit square) == 0");
    }

    // semi-discrete dual, 2 atoms, analytic boundary
    {
        Grid g(Domain(0, 1, 0, 1), 128, 128);
        Density d = Density::uniform(g);
        AtomSet atoms = AtomSet::uniform_weights({{0.25, 0.5}, {0.75, 0.5}});
        atoms.weights = {0.62, 0.38};
        Tessellation t = solve_potentials(d, atoms);
        const double u = 0.5 + 2.0 * (t.potentials[0] - t.potentials[1]);
        check(std::abs(u - 0.62) <= 2.0 / 128, "sdot dual boundary at u = 0.62");
        check(std::abs(t.masses[0] - 0.62) <= 2.0 / 128, "sdot masses match weights");
    }

    // gradient vs central finite differences
    {
        Grid g(Domain(0, 1, 0, 1), 128, 128);
        Density d = Density::uniform(g);
        AtomSet atoms = AtomSet::uniform_weights({{0.31, 0.42}, {0.68, 0.61}});
        Tessellation t = solve_potentials(d, atoms);
        const auto grad = atom_gradient(atoms, t);
        const double delta = 1e-3 * g.domain().diam();
        AtomSet ap = atoms, am = atoms;
        ap.positions[0].x += delta;
        am.positions[0].x -= delta;
        const double cp = transport_cost(d, ap, solve_potentials(d, ap));
        const double cm = transport_cost(d, am, solve_potentials(d, am));
        const double fd = (cp - cm) / (2.0 * delta);
        check(std::abs(fd - grad[0].x) <= 1e-2 * std::max(1e-6, std::abs(fd)),
              "atom gradient matches finite differences");
    }

    // conservative positive PDE step
    {
        Grid g(Domain(0, 1, 0, 1), 64, 64);
        Rng rng(7);
        Density d(g);
        for (auto& v : d.values()) v = 0.2 + rng.uniform();
        d.normalize();
        AtomSet atoms = AtomSet::uniform_weights({{0.5, 0.5}});
        Tessellation t = solve_potentials(d, atoms);
        FaceVelocity vel = face_velocities(g, atoms, t);
        Density out = step_density(d, DiffusionLaw::linear(), vel, 0.01);
        check(std::abs(total_mass(out) - 1.0) <= 1e-12, "pde conserves mass");
        check(out.min_value() >= 0.0, "pde preserves nonnegativity");
    }

    // exact 1d transport
    {
        Density1D a = Density1D::uniform(256);
        Density1D b(256);
        for (int c = 0; c < 128; ++c) b.values[c] = 2.0;
        Density1D s(256);
        for (int c = 128; c < 256; ++c) s.values[c] = 2.0;
        check(w2_1d(a, a) == 0.0, "w2_1d(p,p) == 0");
        check(std::abs(w2_1d(b, s) - 0.25) < 1e-12, "w2_1d of half-square shift == 1/4");
    }

    // crystallization metrics on the 7-atom hexagon
    {
        std::vector<Vec2> pts{{0.5, 0.5}};
        for (int k = 0; k < 6; ++k)
            pts.push_back({0.5 + 0.2 * std::cos(k * M_PI / 3.0),
                           0.5 + 0.2 * std::sin(k * M_PI / 3.0)});
        AtomSet atoms = AtomSet::uniform_weights(pts);
        auto m = crystallization_metrics(atoms);
        auto psi6 = local_hex_order(atoms);
        check(m.valid && m.nn_cv <= 1e-6, "triangular lattice nn_cv == 0");
        check(psi6[0] >= 0.999, "triangular lattice center psi6 == 1");
    }

    std::printf("%s\n", failures == 0 ? "selftest: all checks passed"
                                      : "selftest: FAILURES detected");
    return failures == 0 ? 0 : 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynquant: Wasserstein gradient flow of semi-discrete energies"};
    app.require_subcommand(1);
    app.footer(dynquant::config_help());

    std::string config_path, out_dir, in_dir, out_path;
    long frame = 0;
    int scale = 4;
    bool fixed_colormap = false;

    auto* simulate = app.add_subcommand("simulate", "run the 2d splitting scheme");
    simulate->add_option("--config", config_path, "configuration file")->required();
    simulate->add_option("--out", out_dir, "override out_dir from the config");

    auto* jko = app.add_subcommand("jko1d", "run the 1d minimizing-movement oracle");
    jko->add_option("--config", config_path, "configuration file")->required();
    jko->add_option("--out", out_dir, "override out_dir from the config");

    auto* render = app.add_subcommand("render", "render a snapshot to PNG");
    render->add_option("--in", in_dir, "snapshot directory")->required();
    render->add_option("--frame", frame, "snapshot step index")->required();
    render->add_option("--scale", scale, "pixels per cell (default 4)");
    render->add_option("--out", out_path, "output image path");
    render->add_flag("--fixed-colormap", fixed_colormap,
                     "color scale over all frames instead of per frame");

    auto* selftest = app.add_subcommand("selftest", "run the built-in oracle/property suite");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed()) {
            dynquant::Config cfg = dynquant::load_config(config_path);
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            if (cfg.mode == dynquant::SimMode::Jko1d)
                throw dynquant::ConfigError("mode jko1d requires the jko1d subcommand");
            auto result = dynquant::run_simulation(cfg);
            auto metrics = dynquant::crystallization_metrics(result.state.atoms);
            std::printf("done: %ld steps, %zu alive atoms, energy %.8g", cfg.steps,
                        result.state.atoms.alive_count(), result.series.back().e.total);
            if (metrics.valid)
                std::printf(", nn_cv %.4g, hex_order %.4g", metrics.nn_cv, metrics.hex_order);
            std::printf("\nwrote %s/series.csv\n", cfg.out_dir.c_str());
        } else if (jko->parsed()) {
            dynquant::Config cfg = dynquant::load_config(config_path);
            if (!out_dir.empty()) cfg.out_dir = out_dir;
            auto result = dynquant::run_jko1d(cfg);
            std::printf("done: %ld steps, final energy %.8g\nwrote %s/series.csv\n", cfg.steps,
                        result.series.back().e.total, cfg.out_dir.c_str());
        } else if (render->parsed()) {
            dynquant::RenderOptions opt;
            opt.pixel_scale = scale;
            opt.fixed_colormap = fixed_colormap;
            opt.out_path = out_path;
            std::string written = dynquant::render_frame(in_dir, frame, opt);
            std::printf("wrote %s\n", written.c_str());
        } else if (selftest->parsed()) {
            return run_selftest();
        }
    } catch (const dynquant::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
