#pragma once

#include <atomic>
#include <exception>
#include <thread>
#include <vector>

namespace hmmilm::detail {

/// Runs fn(0..jobs-1) on `workers` threads. Each job writes only its own slot, so results
/// do not depend on the worker count. The first exception in job order is rethrown.
template <class F>
void run_jobs(int jobs, int workers, F&& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(jobs));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int j = next++; j < jobs; j = next++) {
      try {
        fn(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace hmmilm::detail
