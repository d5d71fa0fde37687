#include "bitlattice/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace bitlattice {

namespace {
constexpr std::size_t kMinParallelWork = std::size_t{1} << 14;
}

unsigned worker_count() {
    unsigned hw = std::max(1U, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("BITLATTICE_THREADS")) {
        try {
            long requested = std::stol(env);
            if (requested > 0) return static_cast<unsigned>(std::min<long>(requested, 256));
        } catch (const std::exception&) {
            // unparsable values fall back to auto
        }
    }
    return hw;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    unsigned workers = worker_count();
    if (workers <= 1 || n < kMinParallelWork) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    workers = static_cast<unsigned>(std::min<std::size_t>(workers, n));
    std::size_t chunk = (n + workers - 1) / workers;

    // One slot per chunk; rethrowing the first non-empty slot reports the
    // failure with the lowest index regardless of how work was split.
    std::vector<std::exception_ptr> failures(workers);
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        std::size_t begin = w * chunk;
        std::size_t end = std::min(n, begin + chunk);
        if (begin >= end) break;
        threads.emplace_back([&body, &failures, w, begin, end] {
            try {
                for (std::size_t i = begin; i < end; ++i) body(i);
            } catch (...) {
                failures[w] = std::current_exception();
            }
        });
    }
    for (auto& t : threads) t.join();
    for (auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
}

}  // namespace bitlattice
