#pragma once

#include <vector>

#include "dynquant/atoms.hpp"

namespace dynquant {

struct CrystallizationMetrics {
    bool valid = false;   // requires >= 3 alive atoms
    double nn_mean = 0.0;
    double nn_cv = 0.0;
    double hex_order = 0.0;
};

// Per-atom hexatic order |mean over the k nearest neighbors of e^{i 6 theta}|,
// k = min(6, alive-1).  Entries of dead atoms are 0.
std::vector<double> local_hex_order(const AtomSet& atoms);

// Nearest-neighbor mean/cv and the mean local hexatic order over alive atoms.
CrystallizationMetrics crystallization_metrics(const AtomSet& atoms);

}  // namespace dynquant
