#pragma once

#include <cstdint>
#include <random>

namespace ccra {

/// Seeded generator with explicitly-coded distributions. std::mt19937_64 is
/// fully specified by the standard, and we avoid std::*_distribution because
/// their output is implementation-defined; this keeps every seeded artifact
/// reproducible byte for byte.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * (1.0 / 9007199254740992.0);
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller (no cached spare).
  double normal();

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) { return engine_() % n; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ccra
