#pragma once

#include <cstdint>
#include <random>

namespace dynquant {

// Seeded generator with explicit scaling so draws are identical across
// standard-library implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    double uniform() { return (engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

}  // namespace dynquant
