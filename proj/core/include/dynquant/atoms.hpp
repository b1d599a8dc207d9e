#pragma once

#include <cstdint>
#include <vector>

#include "dynquant/geometry.hpp"

namespace dynquant {

// The atomic measure mu = sum_i a_i delta_{x_i}.  Dead atoms keep their last
// position, carry weight exactly 0, and never own Laguerre cells again.
struct AtomSet {
    std::vector<Vec2> positions;
    std::vector<double> weights;
    std::vector<uint8_t> alive;

    std::size_t size() const { return positions.size(); }

    std::size_t alive_count() const {
        std::size_t n = 0;
        for (uint8_t a : alive) n += a ? 1 : 0;
        return n;
    }

    static AtomSet uniform_weights(std::vector<Vec2> pts) {
        AtomSet s;
        const std::size_t n = pts.size();
        s.positions = std::move(pts);
        s.weights.assign(n, n > 0 ? 1.0 / static_cast<double>(n) : 0.0);
        s.alive.assign(n, 1);
        return s;
    }

    double weight_sum() const {
        KahanSum s;
        for (std::size_t i = 0; i < size(); ++i)
            if (alive[i]) s.add(weights[i]);
        return s.value();
    }

    // Minimum pairwise distance between alive atoms; +inf with fewer than two.
    double min_pairwise_distance() const;
};

}  // namespace dynquant
