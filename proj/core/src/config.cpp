#include "dynquant/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace dynquant {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

struct Parser {
    std::string origin;
    int lineno = 0;

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + msg);
    }

    double number(const std::string& key, const std::string& v) const {
        char* end = nullptr;
        double x = std::strtod(v.c_str(), &end);
        if (end == v.c_str() || *end != '\0') fail(key + ": expected a number, got '" + v + "'");
        return x;
    }
    long integer(const std::string& key, const std::string& v) const {
        char* end = nullptr;
        long x = std::strtol(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0') fail(key + ": expected an integer, got '" + v + "'");
        return x;
    }
    uint64_t unsigned64(const std::string& key, const std::string& v) const {
        char* end = nullptr;
        unsigned long long x = std::strtoull(v.c_str(), &end, 10);
        if (end == v.c_str() || *end != '\0')
            fail(key + ": expected an unsigned integer, got '" + v + "'");
        return x;
    }
    bool boolean(const std::string& key, const std::string& v) const {
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        fail(key + ": expected true or false, got '" + v + "'");
    }
};

// value of the form name(arg1,arg2,...)
bool parse_call(const std::string& v, const std::string& name, std::vector<std::string>& args) {
    if (v.size() < name.size() + 2 || v.compare(0, name.size(), name) != 0) return false;
    if (v[name.size()] != '(' || v.back() != ')') return false;
    std::string inner = v.substr(name.size() + 1, v.size() - name.size() - 2);
    args.clear();
    std::stringstream ss(inner);
    std::string piece;
    while (std::getline(ss, piece, ',')) args.push_back(trim(piece));
    return true;
}

}  // namespace

Config parse_config_text(const std::string& text, const std::string& origin) {
    Config cfg;
    Parser p{origin};
    std::istringstream in(text);
    std::string line;
    bool alpha_set = false;

    while (std::getline(in, line)) {
        ++p.lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;

        std::size_t eq = line.find('=');
        if (eq == std::string::npos) p.fail("expected 'key = value'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty()) p.fail("missing key");
        if (value.empty()) p.fail(key + ": missing value");

        if (key == "mode") {
            if (value == "full") cfg.mode = SimMode::Full;
            else if (value == "quantization") cfg.mode = SimMode::Quantization;
            else if (value == "lloyd") cfg.mode = SimMode::Lloyd;
            else if (value == "jko1d") cfg.mode = SimMode::Jko1d;
            else p.fail("mode must be one of full|quantization|lloyd|jko1d");
        } else if (key == "nx") {
            cfg.nx = static_cast<int>(p.integer(key, value));
            if (cfg.nx < 1) p.fail("nx must be >= 1");
        } else if (key == "ny") {
            cfg.ny = static_cast<int>(p.integer(key, value));
            if (cfg.ny < 1) p.fail("ny must be >= 1");
        } else if (key == "domain") {
            std::stringstream ss(value);
            double a, b, c, d;
            if (!(ss >> a >> b >> c >> d)) p.fail("domain expects 'x_min x_max y_min y_max'");
            std::string rest;
            if (ss >> rest) p.fail("domain expects exactly four numbers");
            if (!(a < b) || !(c < d)) p.fail("domain requires x_min < x_max and y_min < y_max");
            cfg.domain = Domain(a, b, c, d);
        } else if (key == "n_atoms") {
            cfg.n_atoms = static_cast<int>(p.integer(key, value));
            if (cfg.n_atoms < 1) p.fail("n_atoms must be >= 1");
        } else if (key == "seed") {
            cfg.seed = p.unsigned64(key, value);
        } else if (key == "tau") {
            cfg.tau = p.number(key, value);
            if (!(cfg.tau > 0.0)) p.fail("tau must be > 0");
        } else if (key == "alpha") {
            alpha_set = true;
            if (value == "sqrtN") {
                cfg.alpha_is_sqrt_n = true;
            } else {
                cfg.alpha = p.number(key, value);
                cfg.alpha_is_sqrt_n = false;
                if (cfg.alpha < 0.0) p.fail("alpha must be >= 0 or the token sqrtN");
            }
        } else if (key == "steps") {
            cfg.steps = p.integer(key, value);
            if (cfg.steps < 0) p.fail("steps must be >= 0");
        } else if (key == "snapshot_every") {
            cfg.snapshot_every = p.integer(key, value);
            if (cfg.snapshot_every < 1) p.fail("snapshot_every must be >= 1");
        } else if (key == "diffusion") {
            if (value == "linear") cfg.diffusion_linear = true;
            else if (value == "pme") cfg.diffusion_linear = false;
            else p.fail("diffusion must be linear or pme");
        } else if (key == "m") {
            cfg.m = p.number(key, value);
            if (!(cfg.m > 1.0)) p.fail("m must be > 1");
        } else if (key == "g_kappa") {
            cfg.g_kappa = p.number(key, value);
            if (!(cfg.g_kappa > 0.0)) p.fail("g_kappa must be > 0");
        } else if (key == "g_beta") {
            cfg.g_beta = p.number(key, value);
            if (!(cfg.g_beta > 0.0 && cfg.g_beta < 1.0)) p.fail("g_beta must lie in (0,1)");
        } else if (key == "a_min") {
            cfg.a_min = p.number(key, value);
            if (!(cfg.a_min > 0.0 && cfg.a_min < 1.0)) p.fail("a_min must lie in (0,1)");
        } else if (key == "psi_sign") {
            if (value == "el") cfg.psi_sign = PsiSign::EulerLagrange;
            else if (value == "intro") cfg.psi_sign = PsiSign::Intro;
            else p.fail("psi_sign must be el or intro");
        } else if (key == "ot_tol") {
            cfg.ot_tol = p.number(key, value);
            if (cfg.ot_tol < 0.0) p.fail("ot_tol must be >= 0 (0 = auto)");
        } else if (key == "ot_max_iter") {
            cfg.ot_max_iter = static_cast<int>(p.integer(key, value));
            if (cfg.ot_max_iter < 1) p.fail("ot_max_iter must be >= 1");
        } else if (key == "cfl_safety") {
            cfg.cfl_safety = p.number(key, value);
            if (!(cfg.cfl_safety > 0.0 && cfg.cfl_safety <= 1.0))
                p.fail("cfl_safety must lie in (0,1]");
        } else if (key == "init_density") {
            std::vector<std::string> args;
            if (value == "uniform") {
                cfg.init_density = InitDensityKind::Uniform;
            } else if (parse_call(value, "gaussian", args)) {
                if (args.size() != 3) p.fail("init_density gaussian expects (cx,cy,sigma)");
                cfg.init_density = InitDensityKind::Gaussian;
                cfg.gaussian_center = {p.number(key, args[0]), p.number(key, args[1])};
                cfg.gaussian_sigma = p.number(key, args[2]);
                if (!(cfg.gaussian_sigma > 0.0)) p.fail("gaussian sigma must be > 0");
            } else if (parse_call(value, "file", args)) {
                if (args.size() != 1 || args[0].empty()) p.fail("init_density file expects (path)");
                cfg.init_density = InitDensityKind::File;
                cfg.density_file = args[0];
            } else {
                p.fail("init_density must be uniform, gaussian(cx,cy,sigma) or file(path)");
            }
        } else if (key == "init_atoms") {
            std::vector<std::string> args;
            if (value == "random") {
                cfg.init_atoms = InitAtomsKind::Random;
            } else if (parse_call(value, "file", args)) {
                if (args.size() != 1 || args[0].empty()) p.fail("init_atoms file expects (path)");
                cfg.init_atoms = InitAtomsKind::File;
                cfg.atoms_file = args[0];
            } else {
                p.fail("init_atoms must be random or file(path)");
            }
        } else if (key == "out_dir") {
            cfg.out_dir = value;
        } else if (key == "jko_cells") {
            cfg.jko_cells = static_cast<int>(p.integer(key, value));
            if (cfg.jko_cells < 2) p.fail("jko_cells must be >= 2");
        } else if (key == "jko_inner_tol") {
            cfg.jko_inner_tol = p.number(key, value);
            if (!(cfg.jko_inner_tol > 0.0)) p.fail("jko_inner_tol must be > 0");
        } else if (key == "jko_freeze_atoms") {
            cfg.jko_freeze_atoms = p.boolean(key, value);
        } else if (key == "atoms_1d") {
            cfg.atoms_1d.clear();
            std::stringstream ss(value);
            double x;
            while (ss >> x) cfg.atoms_1d.push_back(x);
            if (cfg.atoms_1d.empty()) p.fail("atoms_1d expects a list of positions");
        } else {
            p.fail("unknown key '" + key + "'");
        }
    }
    (void)alpha_set;
    return cfg;
}

Config load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file: " + path);
    std::stringstream buf;
    buf << f.rdbuf();
    return parse_config_text(buf.str(), path);
}

std::string config_help() {
    return
        "Config file format: one 'key = value' per line, '#' starts a comment.\n"
        "Keys and defaults:\n"
        "  mode = quantization        full | quantization | lloyd | jko1d\n"
        "  nx = 128                   grid cells in x\n"
        "  ny = 128                   grid cells in y\n"
        "  domain = 0 1 0 1           x_min x_max y_min y_max\n"
        "  n_atoms = 50\n"
        "  seed = 42                  64-bit unsigned\n"
        "  tau = 0.01                 macro time step\n"
        "  alpha = sqrtN              velocity scaling; a real or the token sqrtN\n"
        "  steps = 200\n"
        "  snapshot_every = 20\n"
        "  diffusion = linear         linear | pme\n"
        "  m = 2.0                    porous-medium exponent (> 1)\n"
        "  g_kappa = 1.0              mass cost g(a) = kappa a^beta\n"
        "  g_beta = 0.5               must lie in (0,1)\n"
        "  a_min = 1e-6               death threshold for weights\n"
        "  psi_sign = el              el | intro (weight-ODE potential sign)\n"
        "  ot_tol = 0                 0 = auto: max(1e-7, 0.5*hx*hy*max rho)\n"
        "  ot_max_iter = 1000\n"
        "  cfl_safety = 0.4           in (0,1]\n"
        "  init_density = uniform     uniform | gaussian(cx,cy,sigma) | file(path)\n"
        "  init_atoms = random        random | file(path)\n"
        "  out_dir = out\n"
        "  jko_cells = 512            1d oracle grid size\n"
        "  jko_inner_tol = 1e-10      inner objective-decrease tolerance\n"
        "  jko_freeze_atoms = false\n"
        "  atoms_1d =                 optional 1d positions, e.g. '0.3 0.7'\n";
}

}  // namespace dynquant
