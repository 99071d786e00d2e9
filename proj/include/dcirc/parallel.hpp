#pragma once

#include <utility>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dcirc {

// Execution policy for the embarrassingly parallel loops (strategy scans,
// grid probes, VOI instantiations, plot samples). Every parallel loop fills
// a preallocated slot per index and reduces serially afterwards, so results
// are bit-identical to the serial path regardless of thread count.
enum class Exec { Serial, Parallel };

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

template <typename F>
void parallel_for(Exec exec, long n, F&& f) {
    if (exec == Exec::Parallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
        for (long i = 0; i < n; ++i) f(i);
        return;
#endif
    }
    for (long i = 0; i < n; ++i) f(i);
}

}  // namespace dcirc
