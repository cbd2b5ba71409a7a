#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace metarm {

// SplitMix64 step. Used to mix seeds and derive independent streams.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Derives a stream seed from a master seed and up to three tags. Different
// tags give statistically independent streams; the mapping is pure.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag_a,
                                 std::uint64_t tag_b = 0, std::uint64_t tag_c = 0) {
  std::uint64_t s = master;
  std::uint64_t x = splitmix64(s);
  s ^= tag_a * 0x9e3779b97f4a7c15ULL;
  x ^= splitmix64(s);
  s ^= tag_b * 0xc2b2ae3d27d4eb4fULL;
  x ^= splitmix64(s);
  s ^= tag_c * 0x165667b19e3779f9ULL;
  x ^= splitmix64(s);
  return x;
}

// Deterministic random source. Wraps std::mt19937_64 (whose output sequence
// is fixed by the standard) and applies explicit transforms instead of the
// implementation-defined std distributions, so identical seeds give
// bit-identical draws on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller. Draws two uniforms per call and keeps
  // one value so each call is a pure function of the engine state.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    while (u1 == 0.0) u1 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform index in [0, n) by rejection, free of modulo bias.
  std::size_t index(std::size_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return static_cast<std::size_t>(x % n);
  }

  // Fisher-Yates shuffle of an index permutation.
  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = i;
    for (std::size_t i = n; i > 1; --i) {
      std::size_t j = index(i);
      std::swap(p[i - 1], p[j]);
    }
    return p;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace metarm
