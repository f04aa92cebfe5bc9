#include "evfgn/parallel.hpp"

#include <omp.h>

namespace evfgn {

namespace {
constexpr std::size_t kMinParallelWork = 4;
}

bool fork_threads(Exec exec, std::size_t work) noexcept {
  return exec == Exec::parallel && work >= kMinParallelWork && !omp_in_parallel() && omp_get_max_threads() > 1;
}

int max_threads() noexcept { return omp_get_max_threads(); }

void set_threads(int n) noexcept {
  if (n > 0) omp_set_num_threads(n);
}

}  // namespace evfgn
