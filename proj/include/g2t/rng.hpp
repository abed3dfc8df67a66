#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace g2t {

// Distribution helpers on top of mt19937_64. The standard distributions are
// implementation-defined, so these are hand-rolled to keep seeded streams
// identical across toolchains.

inline double uniform_unit(std::mt19937_64& g) {
  // 53 random mantissa bits -> [0, 1)
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& g, double lo, double hi) {
  return lo + (hi - lo) * uniform_unit(g);
}

inline uint64_t uniform_index(std::mt19937_64& g, uint64_t n) {
  return n == 0 ? 0 : g() % n;
}

// Box-Muller, two draws per value (no cached spare).
inline double normal_unit(std::mt19937_64& g) {
  double u1 = uniform_unit(g);
  double u2 = uniform_unit(g);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace g2t
