#pragma once

#include <cmath>
#include <cstdint>

#include "oudrift/types.hpp"

namespace oudrift {

namespace detail {

// SplitMix64 finalizer (Stafford mix13).
inline std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace detail

/// Derives an independent stream key for a replicate, so replicate fan-out is
/// reproducible and independent of execution order.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t replicate) {
  return detail::mix64(detail::mix64(seed + detail::kGolden) ^ (replicate + detail::kGolden));
}

/// Counter-based generator: output i of stream `key` is a pure function of
/// (key, i). Same key always produces the same sequence on every platform.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t next_u64() { return detail::mix64(key_ + detail::kGolden * ++counter_); }

  /// Uniform draw in the open interval (0,1).
  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  /// Standard normal via Box-Muller; draws are cached in pairs.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  /// Vector of independent standard normals.
  Vector next_normal_vector(Index n) {
    Vector z(n);
    for (Index i = 0; i < n; ++i) z[i] = next_normal();
    return z;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace oudrift
