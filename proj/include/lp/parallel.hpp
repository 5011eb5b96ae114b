#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lp {

/// Worker count: LP_THREADS if set, else the hardware concurrency.
unsigned default_threads();

/// Runs f(0) .. f(n-1) on a small thread pool. Callers write results into
/// slot i, so the outcome does not depend on the schedule. The first
/// exception thrown by any task is rethrown after all workers finish.
template <typename F>
void parallel_for(long n, F&& f, unsigned threads = 0) {
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<long>(threads, n));
  if (threads <= 1) {
    for (long i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (long i = next++; i < n; i = next++) {
          try {
            f(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
  }
  if (error) std::rethrow_exception(error);
}

}  // namespace lp
