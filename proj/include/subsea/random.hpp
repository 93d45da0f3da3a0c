#pragma once

#include <cstdint>
#include <random>

namespace subsea {

/// SplitMix64 finalizer. Used to derive independent keys from integers.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30U)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27U)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31U);
}

/// Maps 64 random bits onto [0, 1) with 53-bit resolution.
constexpr double unit_from_bits(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11U) * 0x1.0p-53;
}

/// A keyed random stream.
///
/// Streams are never shared between consumers. A consumer that needs
/// randomness for a sub-task derives a child stream from a stable index
/// (particle number, replication number, ...), so results depend only on
/// the master seed and never on scheduling or thread count.
class Stream {
 public:
  constexpr explicit Stream(std::uint64_t key) noexcept : key_{key} {}

  [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }

  [[nodiscard]] constexpr Stream derive(std::uint64_t index) const noexcept {
    return Stream{splitmix64(key_ ^ splitmix64(index ^ 0x632be59bd9b4e019ULL))};
  }

  /// Counter-based draw in [0, 1): a pure function of (key, counter).
  [[nodiscard]] constexpr double uniform_at(std::uint64_t counter) const noexcept {
    return unit_from_bits(splitmix64(key_ + splitmix64(counter)));
  }

  /// Sequential engine seeded from this stream's key.
  [[nodiscard]] std::mt19937_64 engine() const { return std::mt19937_64{key_}; }

 private:
  std::uint64_t key_;
};

/// Uniform double in [0, 1) from a 64-bit engine, bit-identical across
/// standard library implementations.
inline double uniform01(std::mt19937_64& engine) { return unit_from_bits(engine()); }

/// Uniform index in [0, n). n must be positive.
inline std::size_t uniform_index(std::mt19937_64& engine, std::size_t n) {
  auto i = static_cast<std::size_t>(uniform01(engine) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

}  // namespace subsea
