#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace fbsq {

namespace detail {
inline std::atomic<int>& thread_cap() {
  static std::atomic<int> cap{1};
  return cap;
}
}  // namespace detail

/// Number of worker threads used by row-parallel kernels (>= 1).
inline int thread_count() { return detail::thread_cap().load(); }

inline void set_thread_count(int n) { detail::thread_cap().store(std::max(1, n)); }

/// Reads FBSQ_THREADS; unset or unparsable leaves the current cap alone.
inline void apply_thread_env() {
  if (const char* env = std::getenv("FBSQ_THREADS")) {
    try {
      set_thread_count(std::stoi(env));
    } catch (const std::exception&) {
    }
  }
}

/// Runs fn(row_begin, row_end) over [0, rows). Only used for pointwise
/// kernels, so the result never depends on the thread count.
template <typename Fn>
void parallel_rows(std::size_t rows, Fn&& fn) {
  const auto workers = static_cast<std::size_t>(thread_count());
  if (workers <= 1 || rows < 2 * workers) {
    fn(std::size_t{0}, rows);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  const std::size_t chunk = (rows + workers - 1) / workers;
  for (std::size_t w = 1; w < workers; ++w) {
    const std::size_t b = w * chunk;
    const std::size_t e = std::min(rows, b + chunk);
    if (b >= e) break;
    pool.emplace_back([&fn, b, e] { fn(b, e); });
  }
  fn(std::size_t{0}, std::min(rows, chunk));
}

}  // namespace fbsq
