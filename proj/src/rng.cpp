#include "timebin/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace timebin {

namespace {

std::uint64_t splitmix64(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t sm = seed ^ ((stream_id + 1) * 0xD1B54A32D192ED03ull);
  for (auto &w : s_) w = splitmix64(sm);
  // xoshiro state must not be all zero; splitmix makes this effectively
  // unreachable but guard anyway.
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double RngStream::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) return 0;
  auto idx = static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
  return idx >= n ? n - 1 : idx;
}

long RngStream::poisson(double mean) {
  if (mean < 0.0) throw std::invalid_argument("poisson: negative mean");
  if (mean == 0.0) return 0;
  if (mean > 500.0) throw std::invalid_argument("poisson: mean too large for inversion");
  const double u = uniform();
  double p = std::exp(-mean);
  double cdf = p;
  long k = 0;
  while (u > cdf) {
    ++k;
    p *= mean / static_cast<double>(k);
    cdf += p;
    if (k > 4096) break; // cdf saturated numerically
  }
  return k;
}

long long RngStream::next_success(long long from, long long end, double log1m_p) {
  if (log1m_p >= 0.0) return -1;                          // p <= 0: never fires
  if (!std::isfinite(log1m_p)) return from < end ? from : -1; // p >= 1: every index
  double u = uniform();
  if (u <= 0.0) u = 0x1.0p-53;
  const double gap = std::floor(std::log(u) / log1m_p); // geometric, >= 0
  if (gap > static_cast<double>(end - from)) return -1;
  const long long pos = from + static_cast<long long>(gap);
  return pos < end ? pos : -1;
}

} // namespace timebin
