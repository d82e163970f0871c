#pragma once

#include <atomic>
#include <thread>

#include "kamtori/core.hpp"

namespace kamtori {

/// Global worker budget for data-parallel loops (set from the CLI --threads).
inline std::atomic<unsigned>& thread_budget() {
  static std::atomic<unsigned> n{1};
  return n;
}

inline void set_thread_budget(unsigned n) {
  thread_budget().store(n == 0 ? std::max(1u, std::thread::hardware_concurrency()) : n);
}

/// Run fn(begin, end) over [0, count) split across the thread budget.
template <class Fn>
inline void parallel_for(std::size_t count, Fn&& fn) {
  const unsigned workers = std::min<unsigned>(thread_budget().load(),
                                              static_cast<unsigned>(std::max<std::size_t>(count, 1)));
  if (workers <= 1 || count < 2) {
    fn(std::size_t{0}, count);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  std::exception_ptr err;
  std::mutex err_mu;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t b = w * chunk, e = std::min(count, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&, b, e] {
      try {
        fn(b, e);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace kamtori
