#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdlib>
#include <string>
#include <thread>
#include <vector>

namespace tca {

// Worker count for read-only evaluation. TCA_NUM_THREADS caps it.
inline std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("TCA_NUM_THREADS")) {
    try {
      const long cap = std::stol(env);
      if (cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
    } catch (...) {
    }
  }
  return n;
}

// Calls fn(begin, end) on contiguous chunks of [0, n). Chunk boundaries
// depend only on n and the worker count; callers that write per-index
// results get identical output for any number of workers.
template <class Fn>
void parallel_chunks(std::size_t n, Fn&& fn, std::size_t min_chunk = 64) {
  const std::size_t workers = std::min(worker_count(), std::max<std::size_t>(1, n / min_chunk));
  if (workers <= 1) {
    fn(std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t step = (n + workers - 1) / workers;
  for (std::size_t begin = 0; begin < n; begin += step)
    pool.emplace_back([&fn, begin, end = std::min(n, begin + step)] { fn(begin, end); });
  for (auto& t : pool) t.join();
}

}  // namespace tca
