#pragma once

// Counter-based random streams for replica-parallel Monte Carlo.
//
// Every replica owns its own Philox4x32-10 stream, addressed by
// (seed, replica, substream). Draws never depend on thread scheduling, so an
// ensemble is bit-reproducible for any worker count.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>

namespace ratchet {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static constexpr Counter encrypt(Counter ctr, Key key) noexcept {
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
      key[0] += kW0;
      key[1] += kW1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

/// Named substreams of a replica. Keeping Brownian increments apart from the
/// jump clock lets two discretisations of one replica share their noise.
enum class Substream : std::uint32_t {
  brownian = 0,
  jumps = 1,
  touches = 2,
  aux = 3,
};

namespace detail {

struct ZigguratTables {
  static constexpr int kLayers = 128;
  static constexpr double kTailStart = 3.442619855899;
  static constexpr double kLayerArea = 9.91256303526217e-3;

  std::array<double, kLayers + 1> x{};
  std::array<double, kLayers> ratio{};

  ZigguratTables() {
    double f = std::exp(-0.5 * kTailStart * kTailStart);
    x[0] = kLayerArea / f;
    x[1] = kTailStart;
    x[kLayers] = 0.0;
    for (int i = 2; i < kLayers; ++i) {
      x[i] = std::sqrt(-2.0 * std::log(kLayerArea / x[i - 1] + f));
      f = std::exp(-0.5 * x[i] * x[i]);
    }
    for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
  }
};

inline const ZigguratTables& ziggurat_tables() {
  static const ZigguratTables tables;
  return tables;
}

}  // namespace detail

/// One independent random stream. Satisfies UniformRandomBitGenerator.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream() : RandomStream(0, 0) {}

  RandomStream(std::uint64_t seed, std::uint64_t replica,
               Substream sub = Substream::brownian)
      : key_{static_cast<std::uint32_t>(seed),
             static_cast<std::uint32_t>(seed >> 32)},
        replica_(replica),
        sub_(static_cast<std::uint32_t>(sub)) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    if (lane_ == 2) refill();
    return buffer_[lane_++];
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Rate-1 exponential.
  double exponential() noexcept { return -std::log(uniform()); }

  /// Standard normal (ziggurat, Doornik's ZIGNOR variant).
  double normal() noexcept {
    const auto& zig = detail::ziggurat_tables();
    for (;;) {
      const result_type bits = (*this)();
      const double u = 2.0 * ((static_cast<double>(bits >> 11) + 0.5) *
                              0x1.0p-53) - 1.0;
      const auto layer = static_cast<int>(bits & 0x7F);
      if (std::fabs(u) < zig.ratio[layer]) return u * zig.x[layer];
      if (layer == 0) return normal_tail(u < 0.0);
      const double x = u * zig.x[layer];
      const double f0 = std::exp(-0.5 * (zig.x[layer] * zig.x[layer] - x * x));
      const double f1 =
          std::exp(-0.5 * (zig.x[layer + 1] * zig.x[layer + 1] - x * x));
      if (f1 + uniform() * (f0 - f1) < 1.0) return x;
    }
  }

  /// Poisson count; inversion for small means, which is all the engines need.
  std::uint64_t poisson(double mean) noexcept {
    if (mean <= 0.0) return 0;
    if (mean > 30.0) {
      // Normal approximation would bias; split into chunks instead.
      std::uint64_t total = 0;
      while (mean > 30.0) {
        total += poisson(30.0);
        mean -= 30.0;
      }
      return total + poisson(mean);
    }
    double p = std::exp(-mean);
    double cdf = p;
    const double u = uniform();
    std::uint64_t k = 0;
    while (u > cdf && k < 1000) {
      ++k;
      p *= mean / static_cast<double>(k);
      cdf += p;
    }
    return k;
  }

  std::uint64_t replica() const noexcept { return replica_; }

 private:
  double normal_tail(bool negative) noexcept {
    constexpr double r = detail::ZigguratTables::kTailStart;
    double x = 0.0;
    double y = 0.0;
    do {
      x = std::log(uniform()) / r;
      y = std::log(uniform());
    } while (-2.0 * y < x * x);
    return negative ? x - r : r - x;
  }

  void refill() noexcept {
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                  static_cast<std::uint32_t>(block_ >> 32),
                                  static_cast<std::uint32_t>(replica_),
                                  sub_ ^ (static_cast<std::uint32_t>(
                                              replica_ >> 32) << 8)};
    const auto out = Philox4x32::encrypt(ctr, key_);
    buffer_[0] = (std::uint64_t{out[0]} << 32) | out[1];
    buffer_[1] = (std::uint64_t{out[2]} << 32) | out[3];
    ++block_;
    lane_ = 0;
  }

  Philox4x32::Key key_;
  std::uint64_t replica_;
  std::uint32_t sub_;
  std::uint64_t block_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
  int lane_ = 2;
};

/// The three streams a path simulation consumes.
struct ReplicaStreams {
  RandomStream brownian;
  RandomStream jumps;
  RandomStream touches;

  ReplicaStreams(std::uint64_t seed, std::uint64_t replica)
      : brownian(seed, replica, Substream::brownian),
        jumps(seed, replica, Substream::jumps),
        touches(seed, replica, Substream::touches) {}
};

}  // namespace ratchet
