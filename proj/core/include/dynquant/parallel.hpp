#pragma once

#include <cstddef>
#include <functional>

namespace dynquant {

// Thread cap from DYNQUANT_THREADS (0 or unset = hardware concurrency).
int thread_count();

// Runs fn(begin, end) over disjoint index ranges covering [0, n).  Used only
// for per-element maps with no shared accumulators, so the result does not
// depend on the number of threads.  Reductions stay sequential by policy.
void parallel_for(std::size_t n, const std::function<void(std::size_t, std::size_t)>& fn);

}  // namespace dynquant
