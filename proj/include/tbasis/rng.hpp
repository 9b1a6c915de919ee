#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace tbasis::rng {

// Counter-based pseudo-random generator used for every seeded draw in the
// toolkit. The algorithm is part of the model-file contract (generator
// version below), so streams are reproducible across platforms:
//
//   value(seed, i) = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)
//
// where mix64 is the splitmix64 output function. Normal deviates consume two
// consecutive counter values via the Box-Muller cosine branch. Sub-streams
// are derived by hashing a label (FNV-1a) into the seed.

inline constexpr std::uint32_t kGeneratorVersion = 1;
inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t stream_value(std::uint64_t seed, std::uint64_t counter) {
  return mix64(seed + (counter + 1) * kGolden);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view label) {
  return mix64(seed ^ mix64(fnv1a64(label)));
}

class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return stream_value(seed_, counter_++); }

  // Uniform in (0, 1] from the top 53 bits; never returns 0, so the log in
  // the Box-Muller transform stays finite.
  double next_uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  // Uniform in [0, 1).
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Standard normal; consumes exactly two counter values.
  double next_normal() {
    const double u1 = next_uniform_pos();
    const double u2 = next_uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace tbasis::rng
