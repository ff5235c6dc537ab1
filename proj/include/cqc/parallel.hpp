#pragma once

// Trajectory-level parallelism: static contiguous chunks, no shared mutable
// state. Workers write into index-addressed slots, so results are identical
// for any thread count; reductions happen afterwards in index order.

#include <thread>
#include <vector>

namespace cqc {

inline unsigned default_thread_count() {
  unsigned n = std::thread::hardware_concurrency();
  return n == 0 ? 1 : n;
}

template <typename Fn>
void parallel_for_indexed(int count, unsigned threads, Fn&& fn) {
  if (count <= 0) return;
  if (threads <= 1 || count == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  unsigned n_workers = std::min<unsigned>(threads, static_cast<unsigned>(count));
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  int chunk = (count + static_cast<int>(n_workers) - 1) / static_cast<int>(n_workers);
  for (unsigned t = 0; t < n_workers; ++t) {
    int lo = static_cast<int>(t) * chunk;
    int hi = std::min(count, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace cqc
