#include "dqvi/parallel.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>

#ifdef DQVI_HAVE_OPENMP
#include <omp.h>
#endif

namespace dqvi::par {

namespace {

std::atomic<int> g_cap{0};  // 0 = uninitialized, read env on first use

int env_cap() {
  const char* raw = std::getenv("DQVI_THREADS");
  if (raw == nullptr) return 1 << 20;
  const long v = std::strtol(raw, nullptr, 10);
  return v >= 1 ? static_cast<int>(v) : 1;
}

}  // namespace

int max_threads() {
  int cap = g_cap.load(std::memory_order_relaxed);
  if (cap == 0) {
    cap = env_cap();
    g_cap.store(cap, std::memory_order_relaxed);
  }
#ifdef DQVI_HAVE_OPENMP
  return std::max(1, std::min(cap, omp_get_max_threads()));
#else
  return 1;
#endif
}

void set_thread_cap(int n) { g_cap.store(n >= 1 ? n : 1, std::memory_order_relaxed); }

std::uint64_t index_seed(std::uint64_t base, std::uint64_t index) {
  // splitmix64 step; decorrelates per-index RNG streams from a shared base.
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace detail {

void run_openmp(std::size_t n, void* ctx, void (*trampoline)(void*, std::size_t)) {
#ifdef DQVI_HAVE_OPENMP
  const int threads = max_threads();
#pragma omp parallel for schedule(static) num_threads(threads)
  for (long long i = 0; i < static_cast<long long>(n); ++i) {
    trampoline(ctx, static_cast<std::size_t>(i));
  }
#else
  for (std::size_t i = 0; i < n; ++i) trampoline(ctx, i);
#endif
}

}  // namespace detail

}  // namespace dqvi::par
