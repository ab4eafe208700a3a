#pragma once

#include <cstdint>

namespace ioncav {

// Counter-based 64-bit generator: output j of a stream is a pure function of
// (key, j), so independent streams can be consumed concurrently and results
// do not depend on evaluation order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ull)) {}

  /// Derive an independent stream; same (seed, id) always gives the same stream.
  CounterRng stream(std::uint64_t id) const {
    CounterRng r(0);
    r.key_ = mix(key_ ^ mix(id ^ 0xbb67ae8584caa73bull));
    r.ctr_ = 0;
    return r;
  }

  std::uint64_t next_u64() { return mix(key_ + (ctr_++) * 0x9e3779b97f4a7c15ull); }

  /// Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return double(next_u64() >> 11) * (1.0 / 9007199254740992.0); }

  /// Binomial(m, p) as a sum of Bernoulli draws.
  int binomial(int m, double p) {
    if (p <= 0.0) return 0;
    if (p >= 1.0) return m;
    int k = 0;
    for (int i = 0; i < m; ++i)
      if (uniform() < p) ++k;
    return k;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace ioncav
