#pragma once

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gffil {

// Thread count resolution: explicit value > 0 wins, otherwise GFFIL_THREADS,
// otherwise the OpenMP default. Returns 1 when built without OpenMP.
inline int resolve_threads(int requested = 0) {
#ifdef _OPENMP
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GFFIL_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

// Parallel loop over independent work items. Each item must only write to
// its own slot(s); with that discipline the result is identical for every
// thread count, including the serial path below.
template <class F>
void parallel_for(std::int64_t n, const F& body, int threads = 0) {
#ifdef _OPENMP
  const int nt = resolve_threads(threads);
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt)
  for (std::int64_t i = 0; i < n; ++i) body(i);
#else
  (void)threads;
  for (std::int64_t i = 0; i < n; ++i) body(i);
#endif
}

// Serial reference for the loop above; tests assert bit equality against it.
template <class F>
void serial_for(std::int64_t n, const F& body) {
  for (std::int64_t i = 0; i < n; ++i) body(i);
}

// Pairwise summation over a sample-indexed array. Deterministic reduction:
// the tree shape depends only on the length, never on the thread schedule.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

inline double pairwise_sum(const std::vector<double>& x) {
  return pairwise_sum(x.data(), x.size());
}

}  // namespace gffil
