#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace kanopt {

/// Seeded random source. All distributions are implemented on top of the raw
/// 64-bit stream so that sequences are reproducible bit-for-bit for a given
/// seed, independent of the standard library's distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t raw() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Uniform in [a, b).
  double uniform(double a, double b) { return a + (b - a) * uniform01(); }

  /// Uniform index in {0, ..., n-1}; n must be positive.
  std::size_t uniform_index(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  /// Box-Muller; two uniforms consumed per call.
  double normal(double mean, double sigma) {
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + sigma * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Independent child stream, for splitting work deterministically.
  Rng split() { return Rng(engine_() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace kanopt
