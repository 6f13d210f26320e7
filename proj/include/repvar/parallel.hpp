#pragma once

#include <cstdint>

namespace repvar {

/// Selects the OpenMP kernel or its serial reference. Both produce identical
/// results: every parallel loop writes disjoint outputs and reduces in a fixed order.
enum class ExecPolicy { Serial, Parallel };

/// Bound the OpenMP worker count (0 keeps the runtime default).
void set_thread_count(int threads);
int thread_count();

/// Independent, reproducible RNG seed for stream `index` of `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

}  // namespace repvar

#include <exception>
#include <mutex>

namespace repvar {

/// Runs fn(k) for k in [0, count), in parallel under ExecPolicy::Parallel.
/// The first exception thrown by any iteration is rethrown after the loop.
template <class Fn>
void parallel_for(int count, ExecPolicy policy, Fn&& fn) {
  std::exception_ptr failure;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic) if (policy == ExecPolicy::Parallel)
  for (int k = 0; k < count; ++k) {
    try {
      fn(k);
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace repvar
