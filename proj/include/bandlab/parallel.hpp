// Deterministic task-parallel loop: body(i) must write only to its own slot,
// so the aggregate result is independent of scheduling and worker count.
#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace bandlab {

inline void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (count <= 0) return;
  if (threads < 1) threads = 1;
  threads = std::min({threads, count, static_cast<int>(std::thread::hardware_concurrency() > 0
                                                           ? 8 * std::thread::hardware_concurrency()
                                                           : 64)});
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }

  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count || failed.load(std::memory_order_relaxed)) return;
      try {
        body(i);
      } catch (...) {
        std::scoped_lock lock(error_mutex);
        if (!error) error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace bandlab
