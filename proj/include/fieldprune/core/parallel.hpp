#pragma once

#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <thread>
#include <vector>

namespace fieldprune {

inline int default_threads() {
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

/// Runs fn(chunk, begin, end) over [0, n) split into n_chunks contiguous
/// chunks. Chunk boundaries depend only on n and n_chunks, so per-chunk
/// accumulators reduced in chunk order give bit-identical results for any
/// thread count.
inline void parallel_chunks(
    std::int64_t n, int n_chunks, int n_threads,
    const std::function<void(int, std::int64_t, std::int64_t)>& fn) {
  if (n <= 0) return;
  if (n_chunks < 1) n_chunks = 1;
  if (n_chunks > n) n_chunks = static_cast<int>(n);
  const std::int64_t per = n / n_chunks;
  const std::int64_t rem = n % n_chunks;
  auto chunk_range = [&](int c, std::int64_t& b, std::int64_t& e) {
    b = c * per + std::min<std::int64_t>(c, rem);
    e = b + per + (c < rem ? 1 : 0);
  };

  if (n_threads <= 1 || n_chunks == 1) {
    for (int c = 0; c < n_chunks; ++c) {
      std::int64_t b, e;
      chunk_range(c, b, e);
      fn(c, b, e);
    }
    return;
  }

  std::atomic<int> next{0};
  std::exception_ptr err;
  std::atomic<bool> failed{false};
  auto worker = [&]() {
    for (;;) {
      int c = next.fetch_add(1);
      if (c >= n_chunks || failed.load()) return;
      std::int64_t b, e;
      chunk_range(c, b, e);
      try {
        fn(c, b, e);
      } catch (...) {
        if (!failed.exchange(true)) err = std::current_exception();
        return;
      }
    }
  };
  int workers = std::min(n_threads, n_chunks);
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);
  for (int t = 1; t < workers; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (failed.load() && err) std::rethrow_exception(err);
}

/// Parallel map over [0, n) where each index writes only its own output.
inline void parallel_for(std::int64_t n, int n_threads,
                         const std::function<void(std::int64_t)>& fn) {
  parallel_chunks(n, n_threads * 4, n_threads,
                  [&](int, std::int64_t b, std::int64_t e) {
                    for (std::int64_t i = b; i < e; ++i) fn(i);
                  });
}

}  // namespace fieldprune
