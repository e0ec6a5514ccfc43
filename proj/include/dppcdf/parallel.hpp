#ifndef DPPCDF_PARALLEL_HPP
#define DPPCDF_PARALLEL_HPP

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace dppcdf {

/// Name of the environment variable that caps worker threads.
inline constexpr const char *kThreadsEnv = "DPPCDF_THREADS";

inline std::size_t default_thread_count() {
  if (const char *env = std::getenv(kThreadsEnv); env != nullptr && *env != '\0') {
    try {
      const long v = std::stol(env);
      if (v >= 1) {
        return static_cast<std::size_t>(v);
      }
    } catch (...) {
      // fall through to the hardware default
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

/// Runs body(i) for i in [0, count). Work is claimed dynamically; if any call
/// throws, the exception of the lowest failing index is rethrown.
template <typename Body>
void parallel_for(std::size_t count, Body &&body, std::size_t threads = default_thread_count()) {
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) {
      body(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  const auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(threads - 1);
  for (std::size_t t = 1; t < threads; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  pool.clear();
  for (const auto &e : errors) {
    if (e) {
      std::rethrow_exception(e);
    }
  }
}

} // namespace dppcdf

#endif // DPPCDF_PARALLEL_HPP
