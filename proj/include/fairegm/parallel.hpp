#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fairegm {

// Process-wide kernel thread budget. All parallel kernels partition work by
// output row with a static schedule and keep each row's accumulation order
// fixed, so results are bitwise identical for every thread count; n = 1 runs
// plain serial loops and is the reference mode for determinism tests.
void set_num_threads(int n);
int num_threads();

namespace detail {
extern std::atomic<int> g_threads;
}

template <class F>
void parallel_for(int begin, int end, F&& f) {
  const int nt = detail::g_threads.load(std::memory_order_relaxed);
#ifdef _OPENMP
  if (nt != 1 && end - begin > 1) {
#pragma omp parallel for schedule(static) num_threads(nt)
    for (int i = begin; i < end; ++i) f(i);
    return;
  }
#endif
  for (int i = begin; i < end; ++i) f(i);
}

// Contiguous-chunk variant: f(chunk_begin, chunk_end). Lets row kernels hoist
// scratch buffers out of the row loop. Chunk boundaries carry no state, so
// results stay independent of the thread count.
template <class F>
void parallel_for_blocks(int n, F&& f) {
  int nt = detail::g_threads.load(std::memory_order_relaxed);
  if (nt <= 0) nt = num_threads();
#ifdef _OPENMP
  if (nt != 1 && n > 1) {
    const int chunks = std::min(n, nt);
#pragma omp parallel for schedule(static) num_threads(chunks)
    for (int c = 0; c < chunks; ++c) {
      const int b = int(std::int64_t(n) * c / chunks);
      const int e = int(std::int64_t(n) * (c + 1) / chunks);
      f(b, e);
    }
    return;
  }
#endif
  f(0, n);
}

}  // namespace fairegm
