#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace hexgrid {

/// HEXGRID_THREADS if set to a positive integer, else the machine's
/// hardware concurrency (at least 1).
int default_thread_count();

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Work is split
/// into contiguous chunks, so each index is handled by exactly one worker.
template <class Fn>
void parallel_for(std::size_t count, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(threads, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t begin = count * w / workers;
    const std::size_t end = count * (w + 1) / workers;
    pool.emplace_back([begin, end, &fn] {
      for (std::size_t i = begin; i < end; ++i) fn(i);
    });
  }
}

}  // namespace hexgrid
