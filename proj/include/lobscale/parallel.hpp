#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace lob {

// Runs body(i) for i in [0, n) on `workers` threads (0 -> hardware cores).
// Work items own disjoint output slots, so results are deterministic
// regardless of scheduling. The first thrown exception is rethrown.
inline void parallel_for(long n, int workers, const std::function<void(long)>& body) {
  if (n <= 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  int w = workers > 0 ? workers : static_cast<int>(hw ? hw : 1);
  if (w > n) w = static_cast<int>(n);
  if (w <= 1) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(w));
  for (int t = 0; t < w; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        long i = next.fetch_add(1);
        if (i >= n) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lk(err_mu);
          if (!err) err = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace lob
