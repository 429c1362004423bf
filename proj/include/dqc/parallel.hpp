#pragma once

#include <cstddef>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dqc {

// Thread-count override shared by every parallel kernel in the library.
// 0 means "use the OpenMP default". Reductions are always accumulated in
// deterministic order, so results do not depend on this setting.
void set_max_threads(int n);
int max_threads();

namespace detail {
int resolve_threads(std::size_t work_items);
}

// Parallel loop over [begin, end). The body must be safe to run concurrently
// for distinct indices; grain is the minimum work per invocation worth
// spawning threads for.
template <typename F>
void parallel_for(std::size_t begin, std::size_t end, F&& body,
                  std::size_t grain = 1) {
  if (end <= begin) return;
  const std::size_t count = end - begin;
#ifdef _OPENMP
  const int threads = detail::resolve_threads(count / (grain ? grain : 1));
  if (threads > 1) {
#pragma omp parallel for num_threads(threads) schedule(static)
    for (long long i = static_cast<long long>(begin);
         i < static_cast<long long>(end); ++i) {
      body(static_cast<std::size_t>(i));
    }
    return;
  }
#endif
  for (std::size_t i = begin; i < end; ++i) body(i);
}

}  // namespace dqc
