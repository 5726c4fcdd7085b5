#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "apce/normal.hpp"

namespace apce {

// Seedable RNG with named substreams so replicate/chain randomness is
// independent of scheduling. Substreams are derived by hashing
// (base seed, id path), never by sharing generator state.
class RngStream {
public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), gen_(mix(seed)) {}

  // Independent stream for (this stream's seed, id).
  RngStream substream(std::uint64_t id) const {
    return RngStream(mix(seed_ ^ mix(id + 0x517cc1b727220a95ULL)));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on the open interval (0,1).
  double uniform() {
    return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return norm_quantile(uniform()); }

  // Bernoulli(p).
  bool bernoulli(double p) { return uniform() < p; }

  // Integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    // rejection-free modulo is fine here; n is tiny relative to 2^64
    return gen_() % n;
  }

  std::uint64_t seed() const { return seed_; }

private:
  static std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace apce
