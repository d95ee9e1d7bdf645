#pragma once

// Minimal fork-join helper. The worker count comes from K_FINDER_THREADS
// (default 1); results never depend on it.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

#include "kfinder/linalg.hpp"

namespace kfinder {

inline Index thread_budget() {
  if (const char* env = std::getenv("K_FINDER_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<Index>(v);
  }
  return 1;
}

/// Calls fn(i) for i in [0, count); the first exception is rethrown.
template <class Fn>
void parallel_for(Index count, Fn&& fn) {
  const Index workers = std::min(thread_budget(), count);
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (Index i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (Index w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace kfinder
