#include "nlqw/rng.hpp"

#include <cmath>

namespace nlqw {

double CounterRng::next_normal() {
  // Box-Muller; guard the log against an exact zero draw
  double u1 = next_double();
  double u2 = next_double();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

SpinorField random_field(const LatticeGrid& g, uint64_t seed, uint64_t stream) {
  CounterRng rng(seed, stream);
  SpinorField u(g);
  for (int i = 0; i < g.dim(); ++i) u.v[i] = rng.next_cnormal();
  return u;
}

SpinorField random_unit_field(const LatticeGrid& g, uint64_t seed, uint64_t stream) {
  SpinorField u = random_field(g, seed, stream);
  double n = u.norm();
  u.v /= n;
  return u;
}

}  // namespace nlqw
