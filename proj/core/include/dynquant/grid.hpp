#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dynquant/geometry.hpp"

namespace dynquant {

// Uniform cell-centered grid tiling a rectangular Domain.
// Cells are indexed row-major: c = j*nx + i, i = x index, j = y index.
class Grid {
public:
    Grid() = default;
    Grid(const Domain& domain, int nx, int ny) : domain_(domain), nx_(nx), ny_(ny) {
        if (nx <= 0 || ny <= 0) throw ConfigError("grid requires nx > 0 and ny > 0");
        hx_ = domain.width() / nx;
        hy_ = domain.height() / ny;
    }

    const Domain& domain() const { return domain_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double hx() const { return hx_; }
    double hy() const { return hy_; }
    double cell_area() const { return hx_ * hy_; }
    std::size_t cell_count() const { return static_cast<std::size_t>(nx_) * ny_; }

    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }

    double center_x(int i) const { return domain_.x_min + (i + 0.5) * hx_; }
    double center_y(int j) const { return domain_.y_min + (j + 0.5) * hy_; }
    Vec2 cell_center(int i, int j) const { return {center_x(i), center_y(j)}; }

    bool operator==(const Grid& o) const {
        return nx_ == o.nx_ && ny_ == o.ny_ && domain_.x_min == o.domain_.x_min &&
               domain_.x_max == o.domain_.x_max && domain_.y_min == o.domain_.y_min &&
               domain_.y_max == o.domain_.y_max;
    }

private:
    Domain domain_;
    int nx_ = 1, ny_ = 1;
    double hx_ = 1.0, hy_ = 1.0;
};

// Congestion law: F is the integrand of the internal energy, P the pressure
// P(r) = r F'(r) - F(r).  Linear: F = r log r, P = r.  PorousMedium (m > 1):
// F = r^m/(m-1), P = r^m.
struct DiffusionLaw {
    enum class Kind { Linear, PorousMedium };

    Kind kind = Kind::Linear;
    double m = 2.0;

    static DiffusionLaw linear() { return {Kind::Linear, 2.0}; }
    static DiffusionLaw porous_medium(double m) {
        if (!(m > 1.0)) throw ConfigError("porous medium exponent m must be > 1");
        return {Kind::PorousMedium, m};
    }

    // r log r extended by 0 at r = 0.
    double F(double r) const {
        if (kind == Kind::Linear) return r > 0.0 ? r * std::log(r) : 0.0;
        return std::pow(r, m) / (m - 1.0);
    }
    double pressure(double r) const {
        if (kind == Kind::Linear) return r;
        return std::pow(r, m);
    }
    // P'(r); used by the diffusive CFL bound.
    double pressure_derivative(double r) const {
        if (kind == Kind::Linear) return 1.0;
        return r > 0.0 ? m * std::pow(r, m - 1.0) : 0.0;
    }
};

// Piecewise-constant probability density on a Grid (values in 1/area units).
class Density {
public:
    Density() = default;
    Density(const Grid& grid, double fill = 0.0)
        : grid_(grid), values_(grid.cell_count(), fill) {}
    Density(const Grid& grid, std::vector<double> values)
        : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.cell_count())
            throw ConfigError("density value count does not match grid");
    }

    const Grid& grid() const { return grid_; }
    std::vector<double>& values() { return values_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t c) const { return values_[c]; }
    double& operator[](std::size_t c) { return values_[c]; }
    double at(int i, int j) const { return values_[grid_.index(i, j)]; }

    // Uniform probability density 1/|Omega|.
    static Density uniform(const Grid& grid) {
        return Density(grid, 1.0 / grid.domain().area());
    }

    // Isotropic Gaussian bump, truncated to the domain and normalized.
    static Density gaussian(const Grid& grid, Vec2 center, double sigma);

    // Rescale so the midpoint-rule mass is exactly 1.
    void normalize();

    double max_value() const;
    double min_value() const;

private:
    Grid grid_;
    std::vector<double> values_;
};

// Midpoint-rule integrals over the grid (fixed-order compensated sums).
double total_mass(const Density& d);
double internal_energy(const Density& d, const DiffusionLaw& law);

// (sum |v|^p hx hy)^(1/p); p = infinity gives the max over cells.
double lp_norm(const Density& d, double p);

}  // namespace dynquant
