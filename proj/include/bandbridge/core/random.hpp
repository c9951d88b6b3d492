#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>

namespace bandbridge {

// Counter-based splittable generator.
//
// A stream is identified by a 64-bit key. The i-th draw of a stream is
// finalize(key + (i + 1) * 0x9E3779B97F4A7C15), where finalize is the
// SplitMix64 output function. split(id) derives a child key as
// finalize(key ^ finalize(id)). Uniform doubles take the top 53 bits;
// normals use Box-Muller on two consecutive uniforms. Everything here is
// integer arithmetic plus log/sqrt/cos, so streams are portable.
class Rng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  explicit Rng(std::uint64_t key) noexcept : key_(key) {}

  static constexpr std::uint64_t finalize(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key() const noexcept { return key_; }

  Rng split(std::uint64_t stream) const noexcept {
    return Rng(finalize(key_ ^ finalize(stream)));
  }

  std::uint64_t next_u64() noexcept { return finalize(key_ + (++counter_) * kGolden); }

  // Uniform in [0, 1).
  double uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

  double normal() noexcept {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  // Uniform integer in [0, n), rejection sampled.
  std::uint64_t below(std::uint64_t n) noexcept {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = next_u64();
    while (x >= limit) x = next_u64();
    return x % n;
  }

  // Uniform integer in [lo, hi].
  int between(int lo, int hi) noexcept {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace bandbridge
