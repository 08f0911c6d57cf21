#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gse::par {

/// Process-wide switch between the OpenMP kernels and their serial reference
/// implementations.  Both paths compute every element with the same scalar
/// expression and reduce in the same order, so results are bit-identical;
/// the serial path exists as the reference for tests and benchmarks.
bool enabled() noexcept;
void set_enabled(bool on) noexcept;
int max_threads() noexcept;

/// Runs f(i) for i in [0, n).  Each index writes only its own output slots,
/// which keeps the parallel schedule free to permute iterations.
template <class F>
void for_each_index(std::ptrdiff_t n, F&& f) {
  if (enabled()) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 16)
#endif
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) f(i);
  }
}

}  // namespace gse::par
