#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace teamlq {

/// Monte Carlo runs are split into fixed-size chunks with per-chunk
/// substreams; workers race over chunk indices but every chunk writes only
/// its own slot and reductions happen in chunk order afterwards, so the
/// result is a pure function of (seed, total) for any worker count.
inline constexpr std::int64_t kMcChunkSize = 1 << 16;

inline int chunk_count(std::int64_t total, std::int64_t chunk = kMcChunkSize) {
  return static_cast<int>((total + chunk - 1) / chunk);
}

/// fn(chunk_index, begin, count) is invoked once per chunk.
inline void for_each_chunk(std::int64_t total, int workers,
                           const std::function<void(int, std::int64_t, std::int64_t)>& fn,
                           std::int64_t chunk = kMcChunkSize) {
  const int nchunks = chunk_count(total, chunk);
  auto run_one = [&](int idx) {
    const std::int64_t begin = static_cast<std::int64_t>(idx) * chunk;
    const std::int64_t count = std::min(chunk, total - begin);
    fn(idx, begin, count);
  };
  if (workers <= 1 || nchunks <= 1) {
    for (int i = 0; i < nchunks; ++i) run_one(i);
    return;
  }
  std::atomic<int> next{0};
  const int nthreads = std::min(workers, nchunks);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (int t = 0; t < nthreads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < nchunks; i = next.fetch_add(1)) run_one(i);
    });
  }
  for (auto& th : pool) th.join();
}

/// Streaming mean/variance accumulator (Welford), mergeable in fixed order.
struct RunningMoments {
  std::int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const RunningMoments& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double d = o.mean - mean;
    const std::int64_t nt = n + o.n;
    mean += d * static_cast<double>(o.n) / static_cast<double>(nt);
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) /
                     static_cast<double>(nt);
    n = nt;
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  double std_error() const {
    return n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0;
  }
};

}  // namespace teamlq
