#ifndef MANDET_PARALLEL_HPP
#define MANDET_PARALLEL_HPP

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mandet {

/// Execution mode for the data-parallel kernels (candidate grids, epoch
/// scans, observability maps). Serial is the reference path; Parallel runs
/// the same per-item code under OpenMP. Results are written into
/// pre-sized slots indexed by item, so both modes produce identical output.
enum class ExecMode { Serial, Parallel };

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

template <typename Body>
void parallel_for(ExecMode mode, std::ptrdiff_t n, Body&& body) {
#ifdef _OPENMP
  if (mode == ExecMode::Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
#endif
  (void)mode;
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    body(i);
  }
}

}  // namespace mandet

#endif  // MANDET_PARALLEL_HPP
