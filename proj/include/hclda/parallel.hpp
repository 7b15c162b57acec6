#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <limits>
#include <thread>
#include <vector>

namespace hclda {

/// Parallel map over the index range [0, count). Each index must write only
/// its own output slot, so the result never depends on the schedule. If
/// several indices throw, the exception from the smallest index is rethrown,
/// which keeps error reporting deterministic as well.
///
/// threads == 0 uses the hardware concurrency; threads == 1 runs inline,
/// which callers use to avoid nesting parallel regions.
template <typename Fn>
void parallel_for(std::size_t count, Fn&& fn, unsigned threads = 0) {
  if (count == 0) return;
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  threads = static_cast<unsigned>(
      std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }

  std::atomic<std::size_t> next{0};
  const std::size_t chunk =
      std::max<std::size_t>(1, count / (8 * static_cast<std::size_t>(threads)));
  std::vector<std::size_t> error_index(threads,
                                       std::numeric_limits<std::size_t>::max());
  std::vector<std::exception_ptr> error(threads);

  auto worker = [&](unsigned slot) {
    for (;;) {
      const std::size_t begin = next.fetch_add(chunk);
      if (begin >= count) return;
      const std::size_t end = std::min(count, begin + chunk);
      for (std::size_t i = begin; i < end; ++i) {
        try {
          fn(i);
        } catch (...) {
          if (i < error_index[slot]) {
            error_index[slot] = i;
            error[slot] = std::current_exception();
          }
        }
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker, t);
  for (auto& th : pool) th.join();

  std::size_t first = std::numeric_limits<std::size_t>::max();
  std::exception_ptr what;
  for (unsigned t = 0; t < threads; ++t) {
    if (error[t] && error_index[t] < first) {
      first = error_index[t];
      what = error[t];
    }
  }
  if (what) std::rethrow_exception(what);
}

}  // namespace hclda
