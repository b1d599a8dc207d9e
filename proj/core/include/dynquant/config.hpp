#pragma once

#include <cstdint>
#include <string>

#include "dynquant/geometry.hpp"

namespace dynquant {

enum class SimMode { Full, Quantization, Lloyd, Jko1d };
enum class PsiSign { EulerLagrange, Intro };
enum class InitDensityKind { Uniform, Gaussian, File };
enum class InitAtomsKind { Random, File };

// Flat key = value run configuration.  See load_config for the format and
// config_help() for the full key list with defaults.
struct Config {
    SimMode mode = SimMode::Quantization;
    int nx = 128;
    int ny = 128;
    Domain domain{0.0, 1.0, 0.0, 1.0};
    int n_atoms = 50;
    uint64_t seed = 42;
    double tau = 0.01;
    double alpha = -1.0;       // resolved value; alpha_is_sqrt_n tracks the token
    bool alpha_is_sqrt_n = true;
    long steps = 200;
    long snapshot_every = 20;
    bool diffusion_linear = true;
    double m = 2.0;
    double g_kappa = 1.0;
    double g_beta = 0.5;
    double a_min = 1e-6;
    PsiSign psi_sign = PsiSign::EulerLagrange;
    double ot_tol = 0.0;       // 0 = auto
    int ot_max_iter = 1000;
    double cfl_safety = 0.4;

    InitDensityKind init_density = InitDensityKind::Uniform;
    Vec2 gaussian_center{0.5, 0.5};
    double gaussian_sigma = 0.1;
    std::string density_file;

    InitAtomsKind init_atoms = InitAtomsKind::Random;
    std::string atoms_file;

    std::string out_dir = "out";

    // jko1d mode
    int jko_cells = 512;
    double jko_inner_tol = 1e-10;
    bool jko_freeze_atoms = false;
    std::vector<double> atoms_1d;  // optional explicit sorted positions

    double resolved_alpha() const {
        return alpha_is_sqrt_n ? std::sqrt(static_cast<double>(n_atoms)) : alpha;
    }
};

// Parses the plain-text format: one `key = value` per line, `#` comments,
// unknown keys rejected, range violations reported per key.
Config load_config(const std::string& path);
Config parse_config_text(const std::string& text, const std::string& origin);

std::string config_help();

}  // namespace dynquant
