#pragma once

#include <cstdint>
#include <random>

namespace wbt {

/// splitmix64 finalizer; used to derive independent stream seeds.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Fixed stream ids so that the same seed feeds the same consumer in every
// code path (session, replay, batch evaluation).
enum class RngStream : std::uint64_t {
  plant = 1,
  randomization = 2,
  curriculum = 3,
  transport_up = 4,
  transport_down = 5,
  obs_noise = 6,
};

/// Owned per-environment generator. uniform() is built from raw bits so the
/// sequence does not depend on the standard library's distribution code.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}
  Rng(std::uint64_t seed, RngStream stream)
      : engine_(mix_seed(seed, static_cast<std::uint64_t>(stream))) {}

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi]; returns lo exactly when the range is collapsed.
  double uniform(double lo, double hi) {
    if (lo == hi) return lo;
    return lo + (hi - lo) * uniform();
  }

  double normal(double mean, double sd) {
    if (sd == 0.0) return mean;
    std::normal_distribution<double> dist(mean, sd);
    return dist(engine_);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t bits() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace wbt
