#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <thread>
#include <vector>

namespace swagan {

namespace detail {
inline std::atomic<int>& thread_count_setting() {
  static std::atomic<int> threads{1};
  return threads;
}
}  // namespace detail

/// Number of workers used to split batch-axis work. 1 means single-threaded.
inline int thread_count() { return detail::thread_count_setting().load(); }
inline void set_thread_count(int n) { detail::thread_count_setting().store(std::max(1, n)); }

/// Runs fn(i) for i in [0, n). Each index writes only its own outputs, so the
/// result does not depend on the worker count.
template <typename Fn>
void parallel_for(std::int64_t n, Fn&& fn) {
  const int workers = static_cast<int>(std::min<std::int64_t>(thread_count(), n));
  if (workers <= 1) {
    for (std::int64_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::int64_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(w)] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace swagan
