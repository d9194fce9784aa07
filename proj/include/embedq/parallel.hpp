#pragma once

#include <cstddef>

namespace embedq {

/// Caps the number of OpenMP workers used by every data-parallel loop.
/// 0 restores the runtime default.
void set_worker_count(int workers);
int worker_count();

/// Runs body(i) for i in [0, n). Iterations must write disjoint outputs;
/// results are then independent of the worker count.
template <typename Body>
void parallel_for(std::size_t n, Body&& body, std::size_t chunk = 64) {
  const auto count = static_cast<long long>(n);
  const auto grain = static_cast<int>(chunk);
#pragma omp parallel for schedule(dynamic, grain)
  for (long long i = 0; i < count; ++i) {
    body(static_cast<std::size_t>(i));
  }
}

}  // namespace embedq
