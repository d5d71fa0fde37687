#pragma once

#include <cstddef>
#include <functional>

namespace bitlattice {

/// Worker count from BITLATTICE_THREADS (0 or unset = hardware concurrency).
unsigned worker_count();

// Calls body(i) for i in [0, n). Each index is visited exactly once; chunks run
// on separate threads only when n is large enough to amortize thread start-up.
// Callers must write to disjoint locations so results do not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace bitlattice
