#pragma once

#include <cstddef>
#include <thread>
#include <vector>

namespace slikit {

// Splits [begin, end) into contiguous chunks and runs fn(chunk_begin,
// chunk_end) on worker threads. Work items must be independent; callers that
// reduce must combine per-chunk results in index order to stay deterministic
// under any thread count.
template <typename Fn>
void parallel_chunks(std::size_t begin, std::size_t end, Fn&& fn, std::size_t min_chunk = 4096) {
  const std::size_t n = end > begin ? end - begin : 0;
  if (n == 0) return;
  std::size_t workers = std::thread::hardware_concurrency();
  if (workers == 0) workers = 1;
  if (workers > (n + min_chunk - 1) / min_chunk) workers = (n + min_chunk - 1) / min_chunk;
  if (workers <= 1) {
    fn(begin, end);
    return;
  }
  const std::size_t chunk = (n + workers - 1) / workers;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = begin + w * chunk;
    if (lo >= end) break;
    const std::size_t hi = lo + chunk < end ? lo + chunk : end;
    pool.emplace_back([&fn, lo, hi] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

}  // namespace slikit
