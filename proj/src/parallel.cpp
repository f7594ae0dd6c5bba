#include "cauchy/parallel.hpp"

#include <cmath>

namespace cauchy {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ (index + 1) * 0xD1B54A32D192ED03ull);
}

unsigned resolve_threads(unsigned requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

SampleStats sample_stats(const std::vector<double>& xs) {
  SampleStats s;
  s.count = xs.size();
  if (xs.empty()) return s;
  long double sum = 0.0L;
  for (double x : xs) sum += x;
  s.mean = static_cast<double>(sum / static_cast<long double>(xs.size()));
  if (xs.size() < 2) return s;
  long double ss = 0.0L;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(static_cast<double>(ss / static_cast<long double>(xs.size() - 1)));
  s.std_error = s.stddev / std::sqrt(static_cast<double>(xs.size()));
  return s;
}

}  // namespace cauchy
