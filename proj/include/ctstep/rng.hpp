#pragma once

#include <cstdint>
#include <random>

namespace ctstep {

/// Seeded RNG with a portable uniform-double mapping.  std::uniform_real_distribution
/// is implementation-defined, so byte-identical outputs across platforms require
/// deriving doubles from the raw 64-bit stream ourselves.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

} // namespace ctstep
