#pragma once

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace rankforge {

/// Process-wide cap on worker threads. 0 means "use hardware concurrency".
/// The RANKFORGE_THREADS environment variable provides the initial value.
inline std::atomic<unsigned>& thread_cap() {
  static std::atomic<unsigned> cap = [] {
    if (const char* env = std::getenv("RANKFORGE_THREADS")) {
      long v = std::strtol(env, nullptr, 10);
      if (v > 0) return static_cast<unsigned>(v);
    }
    return 0u;
  }();
  return cap;
}

inline void set_thread_cap(unsigned n) { thread_cap().store(n); }

inline unsigned effective_threads(std::size_t work_items) {
  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  unsigned cap = thread_cap().load();
  if (cap > 0) hw = std::min(hw, cap);
  return static_cast<unsigned>(std::min<std::size_t>(hw, std::max<std::size_t>(1, work_items)));
}

/// Runs fn(i) for i in [0, n). Work is claimed with an atomic counter, so
/// results must be written to disjoint slots indexed by i; the caller then
/// reduces sequentially, keeping floating-point results order-independent.
template <typename Fn>
void parallel_for(std::size_t n, Fn&& fn) {
  unsigned workers = effective_threads(n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

} // namespace rankforge
