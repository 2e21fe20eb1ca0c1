#pragma once

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace logz {

// Runs fn(i) for i in [0, count) on up to `workers` threads. Tasks are claimed
// from a shared counter; each result must be written into a slot owned by its
// index so reductions stay order-independent of the schedule.
inline void parallel_for_index(long count, int workers, const std::function<void(long)>& fn) {
  if (count <= 0) return;
  workers = static_cast<int>(std::max<long>(1, std::min<long>(workers, count)));
  if (workers == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto body = [&] {
    for (;;) {
      const long i = next.fetch_add(1);
      if (i >= count) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace logz
