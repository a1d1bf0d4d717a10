#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace tkgr {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline uint64_t hash_mix(uint64_t seed, uint64_t v) {
  return splitmix64(seed ^ splitmix64(v));
}

// Deterministic PRNG wrapper. The draw helpers avoid
// std::uniform_*_distribution on purpose: their output differs across
// standard library implementations, and rule banks must be reproducible
// from the seed alone.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(splitmix64(seed)) {}

  uint64_t next_u64() { return gen_(); }

  // Uniform double in [0, 1) with 53 random bits.
  double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n must be positive. Rejection sampling,
  // no modulo bias.
  size_t bounded(size_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v = gen_();
    while (v >= limit) v = gen_();
    return static_cast<size_t>(v % n);
  }

  // Index drawn according to a normalized probability vector.
  size_t weighted(const std::vector<double>& probs) {
    double u = next_double();
    double acc = 0.0;
    for (size_t i = 0; i < probs.size(); ++i) {
      acc += probs[i];
      if (u < acc) return i;
    }
    return probs.size() - 1;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace tkgr
