#pragma once

#include <cstdint>

namespace timebin {

// Deterministic counter-free PRNG (xoshiro256++). We roll our own samplers
// instead of <random> distributions so that identical (seed, stream_id)
// reproduce identical event sequences on every platform.
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  /// Uniform double in [0, 1).
  double uniform();

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

  /// Exact Poisson sample by CDF inversion, valid for mean <= 500;
  /// larger means are the caller's responsibility to decompose.
  long poisson(double mean);

  /// Index of the first success of a Bernoulli(p) scan starting at `from`,
  /// or -1 if it exceeds `end` (exclusive). Geometric skipping, O(successes).
  long long next_success(long long from, long long end, double log1m_p);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

private:
  std::uint64_t s_[4];
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
};

} // namespace timebin
