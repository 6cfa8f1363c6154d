#pragma once

#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace agwp {

inline int default_jobs() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

/// Runs fn(i) for i in [0, count) from at most `jobs` worker threads.
/// Work is handed out in fixed contiguous blocks; the function must not
/// depend on execution order. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  if (count == 0) return;
  jobs = std::max(1, std::min<int>(jobs, static_cast<int>(count)));
  if (jobs == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  const std::size_t chunk = std::max<std::size_t>(1, count / (4 * jobs));
  auto worker = [&] {
    for (;;) {
      std::size_t begin = next.fetch_add(chunk);
      if (begin >= count) return;
      std::size_t end = std::min(count, begin + chunk);
      try {
        for (std::size_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(jobs);
  for (int w = 0; w < jobs; ++w) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

/// Deterministic partitioned reduction: `count` items are split into
/// `partitions` fixed contiguous ranges, each summed sequentially by
/// accumulate(acc, i); the partials are then combined by a fixed-order
/// pairwise tree. The result is bit-for-bit reproducible for a fixed
/// partition count, independent of the number of worker threads.
template <class T, class Accumulate, class Combine>
T partitioned_reduce(std::size_t count, int partitions, int jobs,
                     const T& zero, Accumulate&& accumulate,
                     Combine&& combine) {
  partitions = std::max(1, partitions);
  std::vector<T> partial(static_cast<std::size_t>(partitions), zero);
  parallel_for(static_cast<std::size_t>(partitions), jobs, [&](std::size_t p) {
    std::size_t begin = count * p / partitions;
    std::size_t end = count * (p + 1) / partitions;
    for (std::size_t i = begin; i < end; ++i) accumulate(partial[p], i);
  });
  // Fixed-association pairwise tree.
  std::size_t width = partial.size();
  while (width > 1) {
    std::size_t half = width / 2;
    for (std::size_t k = 0; k < half; ++k)
      combine(partial[k], partial[width - half + k] /* right block */);
    width -= half;
  }
  return partial[0];
}

}  // namespace agwp
