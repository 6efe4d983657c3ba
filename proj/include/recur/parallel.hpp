#pragma once

#include <cstddef>
#include <exception>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace recur {

/// Requested worker count; 0 means RECUR_LDP_THREADS, then the OpenMP default.
struct Parallelism {
    int threads = 0;
};

int resolve_threads(int requested);

/// Runs body(i) for i in [0, count). Every result must be written to a slot
/// owned by i, so output never depends on scheduling. The exception from the
/// lowest failing index is rethrown after the loop.
template <class Body>
void parallel_for(std::size_t count, Parallelism par, Body&& body)
{
    const int threads = resolve_threads(par.threads);
    std::vector<std::exception_ptr> errors;
    bool failed = false;
    if (threads <= 1 || count < 2) {
        for (std::size_t i = 0; i < count; ++i) body(i);
        return;
    }
#if defined(_OPENMP)
    errors.resize(count);
#pragma omp parallel for schedule(dynamic, 16) num_threads(threads) reduction(|| : failed)
    for (long long i = 0; i < static_cast<long long>(count); ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
            failed = true;
        }
    }
    if (failed) {
        for (auto& e : errors)
            if (e) std::rethrow_exception(e);
    }
#else
    for (std::size_t i = 0; i < count; ++i) body(i);
#endif
}

}  // namespace recur
