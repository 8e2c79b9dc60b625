#pragma once

#include <cstddef>
#include <cstdint>

namespace dqvi::par {

enum class Mode { serial, openmp };

/// Thread budget for openmp-mode kernels: min(DQVI_THREADS, hardware).
/// Always >= 1; serial mode ignores it.
int max_threads();

/// Override the DQVI_THREADS cap programmatically (CLI --seed/env handling).
void set_thread_cap(int n);

/// Runs body(i) for i in [0, n). Iterations must be independent: each writes
/// only its own slots, so results are identical in both modes and across
/// thread counts. Reductions happen serially over the filled arrays.
template <typename Body>
void for_each_index(std::size_t n, Mode mode, Body&& body);

/// Deterministic per-index stream seed (splitmix64 over a base seed).
std::uint64_t index_seed(std::uint64_t base, std::uint64_t index);

namespace detail {
void run_openmp(std::size_t n, void* ctx, void (*trampoline)(void*, std::size_t));
}

template <typename Body>
void for_each_index(std::size_t n, Mode mode, Body&& body) {
  if (mode == Mode::serial) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  auto trampoline = [](void* ctx, std::size_t i) { (*static_cast<Body*>(ctx))(i); };
  detail::run_openmp(n, &body, trampoline);
}

}  // namespace dqvi::par
