#pragma once
#include <cstdint>
#include <random>

namespace sflow {

// Deterministic draws on top of mt19937_64.  The standard distributions are
// implementation-defined, so anything that ends up in an output file goes
// through these instead.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline int uniform_int(std::mt19937_64& rng, int n) {  // [0, n)
  uint64_t bound = ~uint64_t{0} - ~uint64_t{0} % static_cast<uint64_t>(n);
  uint64_t v;
  do {
    v = rng();
  } while (v >= bound);
  return static_cast<int>(v % static_cast<uint64_t>(n));
}

inline double normal01(std::mt19937_64& rng) {  // Box-Muller, one value per call
  double u1, u2;
  do {
    u1 = uniform01(rng);
  } while (u1 <= 0.0);
  u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
}

}  // namespace sflow
