#pragma once

// Replica-parallel map with results ordered by replica index, so the output
// does not depend on the number of workers or on scheduling.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <mutex>
#include <thread>
#include <type_traits>
#include <vector>

namespace ratchet {

inline unsigned default_threads() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

template <class Fn>
auto parallel_map(std::uint64_t n, unsigned threads, Fn&& fn)
    -> std::vector<std::invoke_result_t<Fn&, std::uint64_t>> {
  using Result = std::invoke_result_t<Fn&, std::uint64_t>;
  std::vector<Result> results(n);
  if (threads == 0) threads = default_threads();
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, n));
  if (threads <= 1) {
    for (std::uint64_t i = 0; i < n; ++i) results[i] = fn(i);
    return results;
  }

  std::atomic<std::uint64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        results[i] = fn(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next.store(n);
        return;
      }
    }
  };
  {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return results;
}

}  // namespace ratchet
