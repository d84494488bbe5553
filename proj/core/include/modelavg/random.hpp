#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <random>

namespace modelavg {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) {
  return mix64(mix64(seed) ^ mix64(salt + 0x632BE59BD9B4E019ULL));
}

// Reserved stream ids. Worker streams use the worker index directly.
inline constexpr std::uint64_t kCoordinatorStream = 0xC0C0'0000'0000'0001ULL;
inline constexpr std::uint64_t kInitStream = 0xC0C0'0000'0000'0002ULL;
inline constexpr std::uint64_t kMeasurementStream = 0xC0C0'0000'0000'0003ULL;

/// Counter-based generator. The sequence is a pure function of
/// (seed, stream, counter), so any worker step can be replayed in isolation
/// and the order in which threads run has no effect on the draws.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : state_(mix64(seed)) {}
  Rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t counter)
      : state_(mix64(mix64(mix64(seed) ^ stream) ^ (counter * 0xD1B54A32D192ED03ULL))) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, m).
  std::size_t index(std::size_t m) {
    return std::uniform_int_distribution<std::size_t>(0, m - 1)(*this);
  }

  double normal() { return normal_(*this); }

  /// +1 or -1 with equal probability.
  double sign() { return ((*this)() >> 63) ? 1.0 : -1.0; }

 private:
  std::uint64_t state_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace modelavg
