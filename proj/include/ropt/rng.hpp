#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <random>

namespace ropt {

/// Seedable random source used by every sampler in the library.
///
/// Engine: std::mt19937_64, whose output sequence is fixed by the standard.
/// Uniforms take the top 53 bits of one draw; normals use the Box-Muller
/// transform on two uniforms. Neither goes through std::*_distribution, so
/// the numeric streams are identical across standard libraries.
///
/// Stream splitting: a child stream for a tuple of integer tags (round,
/// algorithm index, sample index, ...) is seeded with
/// splitmix64(seed ^ splitmix64(tag_0) ^ splitmix64(tag_1 + 1) ...), see
/// split(). Children never share state with their parent.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Uniform on [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  std::uint64_t next_u64() { return engine_(); }

  Rng split(std::initializer_list<std::uint64_t> tags) const {
    std::uint64_t s = seed_;
    std::uint64_t k = 0;
    for (auto t : tags) s ^= splitmix64(t + k++);
    return Rng(splitmix64(s));
  }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace ropt
