#pragma once

#include <cstddef>

namespace evfgn {

/// Execution policy of the data-parallel kernels. Both policies produce
/// bitwise-identical results: parallel loops only partition independent
/// output cells, never a reduction.
enum class Exec { serial, parallel };

/// True when a loop of `work` independent items should fork threads.
bool fork_threads(Exec exec, std::size_t work) noexcept;

/// Number of threads an OpenMP region would use right now.
int max_threads() noexcept;

void set_threads(int n) noexcept;

}  // namespace evfgn
