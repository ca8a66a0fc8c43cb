#pragma once

#include <cstdint>
#include <random>

namespace pace {

// All randomness goes through std::mt19937_64, whose output sequence is fixed
// by the standard. Doubles are formed from the top 53 bits directly instead of
// through std::uniform_real_distribution, whose algorithm is
// implementation-defined, so traces are identical across platforms.
using Rng = std::mt19937_64;

// Uniform on [0, 1).
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform on [lo, hi).
inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

}  // namespace pace
