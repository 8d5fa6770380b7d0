#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace raiforge {

/// SplitMix64 stream.
///
/// state <- state + 0x9E3779B97F4A7C15, then the output is the state passed
/// through the finalizer (xor-shift 30, mul 0xBF58476D1CE4E5B9, xor-shift 27,
/// mul 0x94D049BB133111EB, xor-shift 31). Uniform doubles take the top 53 bits.
/// A normal draw consumes exactly two uniforms (Box-Muller, cosine branch),
/// so every stream is reproducible bit for bit from the seed alone.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, bound). Uses the multiply-shift reduction.
  std::uint64_t below(std::uint64_t bound) noexcept {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Derive an independent child seed (one SplitMix64 step over a mixed key).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  SplitMix64 g(seed ^ (stream * 0xD1B54A32D192ED03ULL));
  return g.next();
}

}  // namespace raiforge
