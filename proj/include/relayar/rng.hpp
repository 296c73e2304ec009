#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace relayar {

/// splitmix64 finalizer; spreads small integer seeds over the full state space.
constexpr std::uint64_t seed_mix(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t seed_combine(std::uint64_t a, std::uint64_t b) noexcept {
  return seed_mix(a ^ seed_mix(b));
}

/// Seeded RNG whose uniform/gaussian draws are implemented here rather than via
/// std::*_distribution, so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), gen_(seed_mix(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }

  /// Independent stream derived from this one's seed and a tag.
  Rng substream(std::uint64_t tag) const { return Rng(seed_combine(seed_, tag)); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Modulo bias is irrelevant at our n.
  std::uint64_t uniform_int(std::uint64_t n) { return gen_() % n; }

  /// Standard normal via Box-Muller; u1 is shifted off zero so log stays finite.
  double gaussian() {
    const double u1 = (static_cast<double>(gen_() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 gen_;
};

}  // namespace relayar
