#include "dynquant/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dynquant {

Density Density::gaussian(const Grid& grid, Vec2 center, double sigma) {
    if (!(sigma > 0.0)) throw ConfigError("gaussian density requires sigma > 0");
    Density d(grid);
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    for (int j = 0; j < grid.ny(); ++j)
        for (int i = 0; i < grid.nx(); ++i) {
            Vec2 p = grid.cell_center(i, j);
            d[grid.index(i, j)] = std::exp(-(p - center).norm2() * inv2s2);
        }
    d.normalize();
    return d;
}

void Density::normalize() {
    double mass = total_mass(*this);
    if (!(mass > 0.0)) throw NumericalError("cannot normalize a zero-mass density");
    const double inv = 1.0 / mass;
    for (double& v : values_) v *= inv;
}

double Density::max_value() const {
    double m = -std::numeric_limits<double>::infinity();
    for (double v : values_) m = std::max(m, v);
    return m;
}

double Density::min_value() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : values_) m = std::min(m, v);
    return m;
}

double total_mass(const Density& d) {
    KahanSum s;
    for (double v : d.values()) s.add(v);
    return s.value() * d.grid().cell_area();
}

double internal_energy(const Density& d, const DiffusionLaw& law) {
    KahanSum s;
    for (double v : d.values()) s.add(law.F(v));
    return s.value() * d.grid().cell_area();
}

double lp_norm(const Density& d, double p) {
    if (std::isinf(p)) {
        double m = 0.0;
        for (double v : d.values()) m = std::max(m, std::abs(v));
        return m;
    }
    if (!(p >= 1.0)) throw ConfigError("lp_norm requires p >= 1 or p = infinity");
    KahanSum s;
    for (double v : d.values()) s.add(std::pow(std::abs(v), p));
    return std::pow(s.value() * d.grid().cell_area(), 1.0 / p);
}

}  // namespace dynquant
