#pragma once

// Counter-based random number generation (Philox-4x32-10 core) with
// per-stream substreams derived from (seed, stream index), so parallel
// generation is order-independent, plus gamma variate sampling valid for
// all shapes > 0.

#include <array>
#include <cmath>
#include <cstdint>

#include "diskstat/common.hpp"

namespace diskstat {

namespace detail {

struct Philox4x32 {
  static constexpr std::uint32_t mult0 = 0xD2511F53u;
  static constexpr std::uint32_t mult1 = 0xCD9E8D57u;
  static constexpr std::uint32_t weyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t weyl1 = 0xBB67AE85u;

  static std::array<std::uint32_t, 4> block(std::array<std::uint32_t, 4> ctr,
                                            std::uint32_t k0, std::uint32_t k1) {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(mult0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(mult1) * ctr[2];
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
      k0 += weyl0;
      k1 += weyl1;
    }
    return ctr;
  }
};

}  // namespace detail

/// Deterministic stream of uniforms/normals addressed by (seed, stream).
/// Identical (seed, stream) always reproduces the identical sequence,
/// independent of any other stream's consumption.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key0_(static_cast<std::uint32_t>(seed)),
        key1_(static_cast<std::uint32_t>(seed >> 32)),
        stream_lo_(static_cast<std::uint32_t>(stream)),
        stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

  std::uint32_t next_u32() {
    if (buffer_pos_ == 4) refill();
    return buffer_[buffer_pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// uniform in the open interval (0,1); safe under log()
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// standard normal, Box-Muller pair with caching
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * constants::pi * u2;
    cached_ = r * std::sin(theta);
    have_cached_ = true;
    return r * std::cos(theta);
  }

 private:
  void refill() {
    buffer_ = detail::Philox4x32::block(
        {static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
         stream_lo_, stream_hi_},
        key0_, key1_);
    ++counter_;
    buffer_pos_ = 0;
  }

  std::uint32_t key0_, key1_;
  std::uint32_t stream_lo_, stream_hi_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> buffer_{};
  int buffer_pos_ = 4;
  double cached_ = 0.0;
  bool have_cached_ = false;
};

/// Gamma(shape, rate 1) variate; Marsaglia-Tsang squeeze-accept for
/// shape >= 1 and the boost transform gamma(a) = gamma(a+1) U^{1/a} below.
inline double gamma_draw(CounterRng& rng, double shape) {
  if (!(shape > 0.0)) throw std::domain_error("gamma_draw: requires shape > 0");
  if (shape < 1.0) {
    const double g = gamma_draw(rng, shape + 1.0);
    return g * std::pow(rng.uniform(), 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
  }
}

}  // namespace diskstat
