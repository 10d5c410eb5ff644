#pragma once

// Deterministic, platform-independent generator for randomized checks.
// splitmix64 with the standard increment; uniforms take the top 53 bits so
// results are bit-identical across compilers and architectures.

#include <cstdint>

#include "fpme/grid.hpp"

namespace fpme {

struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }
};

inline Field random_field(const GridSpec& g, SplitMix64& rng, double lo = -1.0,
                          double hi = 1.0) {
  Field out = make_field(g);
  for (double& v : out.values) v = rng.uniform(lo, hi);
  return out;
}

}  // namespace fpme
