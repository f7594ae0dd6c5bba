#pragma once

// Index-ordered parallel map and replica bookkeeping. Results never depend on
// the thread count: seeds come from the replica index and reductions run in
// index order on the calling thread.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace cauchy {

std::uint64_t splitmix64(std::uint64_t x);

/// Seed of replica `index` under `master`.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// 0 means "hardware concurrency".
unsigned resolve_threads(unsigned requested);

template <typename T>
std::vector<T> parallel_map(std::size_t count, unsigned threads, const std::function<T(std::size_t)>& fn) {
  std::vector<T> out(count);
  threads = std::max(1u, std::min<unsigned>(resolve_threads(threads), static_cast<unsigned>(count ? count : 1)));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < count;) {
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          next = count;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

struct SampleStats {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation (n - 1)
  double std_error = 0.0;
};

/// Two-pass mean and spread, summed in index order.
SampleStats sample_stats(const std::vector<double>& xs);

}  // namespace cauchy
