#include "dynquant/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace dynquant {

int thread_count() {
    static const int cached = [] {
        const char* env = std::getenv("DYNQUANT_THREADS");
        long v = 0;
        if (env && *env) v = std::strtol(env, nullptr, 10);
        if (v <= 0) v = static_cast<long>(std::thread::hardware_concurrency());
        if (v <= 0) v = 1;
        return static_cast<int>(std::min<long>(v, 64));
    }();
    return cached;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn) {
    const int nt = thread_count();
    if (nt <= 1 || n < 4096) {
        fn(0, n);
        return;
    }
    const std::size_t chunk = (n + nt - 1) / nt;
    std::vector<std::thread> workers;
    workers.reserve(nt - 1);
    for (int t = 1; t < nt; ++t) {
        std::size_t b = std::min(n, t * chunk);
        std::size_t e = std::min(n, b + chunk);
        if (b >= e) break;
        workers.emplace_back(fn, b, e);
    }
    fn(0, std::min(n, chunk));
    for (auto& w : workers) w.join();
}

}  // namespace dynquant
