#pragma once

#include <cstdint>

#include "nlqw/lattice.hpp"

namespace nlqw {

// Counter-based stream: output i of stream (seed, stream_id) is
// splitmix64(seed ^ (stream_id * 0x9e3779b97f4a7c15) ^ i-th state walk).
// Reproducible across platforms; documented in the README.
struct CounterRng {
  uint64_t seed = 0;
  uint64_t counter = 0;

  explicit CounterRng(uint64_t seed_, uint64_t stream = 0)
      : seed(seed_ ^ (stream * 0x9e3779b97f4a7c15ull)), counter(0) {}

  uint64_t next_u64() {
    uint64_t z = seed + (++counter) * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  // uniform in [0,1)
  double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }
  // standard normal via Box-Muller (two uniforms per call, no state carried)
  double next_normal();
  cplx next_cnormal() { return cplx(next_normal(), next_normal()); }
};

// complex-Gaussian field (each component i.i.d. standard complex normal)
SpinorField random_field(const LatticeGrid& g, uint64_t seed, uint64_t stream = 0);
// random field normalized to unit l^2 norm
SpinorField random_unit_field(const LatticeGrid& g, uint64_t seed, uint64_t stream = 0);

}  // namespace nlqw
