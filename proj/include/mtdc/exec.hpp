#pragma once

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mtdc {

/// Execution policy for the data-parallel sweeps (loci, region scan,
/// finite-difference columns, modal projection). Serial is the reference
/// path; Parallel runs the identical per-item body under OpenMP, so both
/// must produce bit-identical results.
enum class Exec { Serial, Parallel };

template <typename F>
void for_each_index(Exec exec, int n, F&& body) {
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < n; ++i) body(i);
    } else {
        for (int i = 0; i < n; ++i) body(i);
    }
}

inline int max_threads() {
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

} // namespace mtdc
