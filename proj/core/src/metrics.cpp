#include "dynquant/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

namespace dynquant {

namespace {

std::vector<std::size_t> alive_ids(const AtomSet& atoms) {
    std::vector<std::size_t> ids;
    for (std::size_t i = 0; i < atoms.size(); ++i)
        if (atoms.alive[i]) ids.push_back(i);
    return ids;
}

}  // namespace

std::vector<double> local_hex_order(const AtomSet& atoms) {
    std::vector<double> psi6(atoms.size(), 0.0);
    const auto ids = alive_ids(atoms);
    if (ids.size() < 2) return psi6;
    const std::size_t k = std::min<std::size_t>(6, ids.size() - 1);

    for (std::size_t a : ids) {
        // k nearest alive neighbors, distance ties broken by atom index
        std::vector<std::pair<double, std::size_t>> cand;
        cand.reserve(ids.size() - 1);
        for (std::size_t b : ids) {
            if (b == a) continue;
            cand.push_back({dist(atoms.positions[a], atoms.positions[b]), b});
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        std::complex<double> sum = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
            const Vec2 d = atoms.positions[cand[t].second] - atoms.positions[a];
            const double theta = std::atan2(d.y, d.x);
            sum += std::exp(std::complex<double>(0.0, 6.0 * theta));
        }
        psi6[a] = std::abs(sum) / static_cast<double>(k);
    }
    return psi6;
}

CrystallizationMetrics crystallization_metrics(const AtomSet& atoms) {
    CrystallizationMetrics m;
    const auto ids = alive_ids(atoms);
    if (ids.size() < 3) return m;
    m.valid = true;

    std::vector<double> nn(ids.size(), 0.0);
    for (std::size_t u = 0; u < ids.size(); ++u) {
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t v = 0; v < ids.size(); ++v) {
            if (u == v) continue;
            best = std::min(best, dist(atoms.positions[ids[u]], atoms.positions[ids[v]]));
        }
        nn[u] = best;
    }
    KahanSum s;
    for (double d : nn) s.add(d);
    m.nn_mean = s.value() / static_cast<double>(nn.size());
    KahanSum var;
    for (double d : nn) var.add((d - m.nn_mean) * (d - m.nn_mean));
    m.nn_cv = m.nn_mean > 0.0
                  ? std::sqrt(var.value() / static_cast<double>(nn.size())) / m.nn_mean
                  : 0.0;

    const auto psi6 = local_hex_order(atoms);
    KahanSum h;
    for (std::size_t i : ids) h.add(psi6[i]);
    m.hex_order = h.value() / static_cast<double>(ids.size());
    return m;
}

}  // namespace dynquant
