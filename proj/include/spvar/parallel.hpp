#ifndef SPVAR_PARALLEL_HPP
#define SPVAR_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace spvar {

/// Thread count from SPVAR_THREADS, else 1.
int default_threads();

/**
 * Runs body(i) for i in [0, count) on up to `threads` workers. Tasks are claimed
 * dynamically; callers store results by index so scheduling never affects output.
 * The first exception thrown by any task is rethrown after all workers join.
 */
template <typename Body>
void parallel_for(int count, int threads, Body&& body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace spvar

#endif  // SPVAR_PARALLEL_HPP
