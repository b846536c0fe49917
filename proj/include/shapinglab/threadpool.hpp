// Worker pool used by the experiment runner and the kernel quadrature.
// SHAPING_LAB_THREADS caps the worker count; results stay deterministic
// because tasks are indexed and outputs are written to preassigned slots.
#pragma once

#include <atomic>
#include <cstdlib>
#include <exception>
#include <algorithm>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace shapinglab {

inline unsigned worker_count() {
  unsigned n = std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  if (const char* env = std::getenv("SHAPING_LAB_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1 && (unsigned long)v < n) n = unsigned(v);
    if (v >= 1 && (unsigned long)v >= 1) n = std::min<unsigned>(n, unsigned(v));
  }
  return n;
}

// run fn(i) for i in [0, count) over the pool; blocks until all are done
inline void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
  const unsigned workers = std::min<std::size_t>(worker_count(), count ? count : 1);
  if (workers <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex err_mu;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace shapinglab
