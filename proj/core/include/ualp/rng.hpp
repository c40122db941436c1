#pragma once

#include <cstdint>
#include <string_view>

namespace ualp::rng {

// Counter-based SplitMix64 streams. A stream is a 64-bit key; its n-th draw
// is a pure function of (key, n), so draws can be taken in any order and
// per-image/per-entity streams are split off without shared state. The
// algorithm is written out in docs/rng.md.

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

constexpr std::uint64_t finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// n-th output of SplitMix64 seeded with `key`.
constexpr std::uint64_t draw(std::uint64_t key, std::uint64_t counter) noexcept {
  return finalize(key + (counter + 1) * kGamma);
}

/// Child stream key for a numeric stream id.
constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t stream) noexcept {
  return finalize(key ^ finalize(stream + kGamma));
}

/// 64-bit FNV-1a, used to turn labels and image ids into stream ids.
constexpr std::uint64_t fnv1a(std::string_view text) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : text) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

constexpr std::uint64_t derive(std::uint64_t key, std::string_view label) noexcept { return derive(key, fnv1a(label)); }

/// Top 53 bits as a double in [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class Stream {
 public:
  constexpr explicit Stream(std::uint64_t key) noexcept : key_(key) {}

  constexpr std::uint64_t key() const noexcept { return key_; }
  constexpr std::uint64_t position() const noexcept { return counter_; }

  constexpr std::uint64_t next_u64() noexcept { return draw(key_, counter_++); }
  constexpr double uniform() noexcept { return to_unit(next_u64()); }
  constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  bool bernoulli(double p) noexcept { return uniform() < p; }

  /// Poisson count by CDF inversion from a single uniform draw.
  std::uint32_t poisson(double mean) noexcept;

  /// Kumaraswamy(a, b) on [0,1] by inverse transform from a single draw.
  double kumaraswamy(double a, double b) noexcept;

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ualp::rng
