#include "dqc/parallel.hpp"

#include <atomic>

namespace dqc {

namespace {
std::atomic<int> g_max_threads{0};
}

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads() {
  int cap = g_max_threads.load();
#ifdef _OPENMP
  int hw = omp_get_max_threads();
  if (cap == 0 || cap > hw) cap = hw;
#else
  cap = 1;
#endif
  return cap < 1 ? 1 : cap;
}

namespace detail {
int resolve_threads(std::size_t work_items) {
  int t = max_threads();
  if (work_items < 2) return 1;
  if (static_cast<std::size_t>(t) > work_items)
    t = static_cast<int>(work_items);
  return t;
}
}  // namespace detail

}  // namespace dqc
