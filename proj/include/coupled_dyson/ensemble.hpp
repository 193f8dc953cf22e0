#pragma once

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace cdyson {

/// Worker count: requested if positive, else the hardware concurrency (min 1).
int resolve_threads(int requested);

/// Runs fn(replica) for replica = 0 .. count-1 on a bounded pool and returns
/// the results in replica order, so output never depends on scheduling.
/// The first exception thrown by any replica is rethrown after the pool joins.
template <class Fn>
auto run_replicas(int count, int threads, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, int>> {
  using Result = std::invoke_result_t<Fn&, int>;
  std::vector<Result> results(count > 0 ? count : 0);
  if (count <= 0) return results;
  const int workers = std::min(resolve_threads(threads), count);
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (int i = next++; i < count; i = next++) {
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next = count;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return results;
}

}  // namespace cdyson
