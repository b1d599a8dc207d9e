#pragma once

#include <algorithm>
#include <cmath>

#include "dynquant/errors.hpp"

namespace dynquant {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm2() const { return x * x + y * y; }
    double norm() const { return std::sqrt(norm2()); }
};

inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }

inline double dist(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

// Axis-aligned rectangle; the (convex, bounded) computational domain.
struct Domain {
    double x_min = 0.0, x_max = 1.0;
    double y_min = 0.0, y_max = 1.0;

    Domain() = default;
    Domain(double x0, double x1, double y0, double y1)
        : x_min(x0), x_max(x1), y_min(y0), y_max(y1) {
        if (!(x_min < x_max) || !(y_min < y_max))
            throw ConfigError("domain requires x_min < x_max and y_min < y_max");
    }

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double area() const { return width() * height(); }
    double diam() const { return std::hypot(width(), height()); }

    bool contains(const Vec2& p) const {
        return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max;
    }

    Vec2 clamp(const Vec2& p) const {
        return {std::clamp(p.x, x_min, x_max), std::clamp(p.y, y_min, y_max)};
    }

    Vec2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
};

// Fixed-order compensated (Kahan) accumulator. Reductions over cells use this
// so results are bit-reproducible and mass checks hold to 1e-12.
struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;

    void add(double v) {
        double y = v - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

}  // namespace dynquant
