#pragma once

#include <cstdint>
#include <limits>

namespace lplace {

/// splitmix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash_key(std::uint64_t seed) noexcept { return mix64(seed); }

template <typename... Rest>
constexpr std::uint64_t hash_key(std::uint64_t seed, std::uint64_t next, Rest... rest) noexcept {
  return hash_key(mix64(seed) ^ (next + 0x632BE59BD9B4E019ULL), rest...);
}

/// Counter-based generator: the stream is a pure function of its key, so a
/// draw keyed by (seed, iteration, candidate) is identical on every thread
/// schedule. Satisfies UniformRandomBitGenerator.
class KeyedRng {
 public:
  using result_type = std::uint64_t;

  template <typename... Keys>
  explicit KeyedRng(std::uint64_t seed, Keys... keys) noexcept
      : key_(hash_key(seed, static_cast<std::uint64_t>(keys)...)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept { return mix64(key_ ^ mix64(counter_++)); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace lplace
