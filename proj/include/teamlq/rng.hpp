#pragma once

#include <cmath>
#include <cstdint>

namespace teamlq {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Self-contained counter-seeded generator (xoshiro256++ core). All sampling
/// in the library goes through this class so that a (seed, call sequence)
/// pair pins the output exactly, independent of platform RNG libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& w : state_) w = splitmix64(s);
  }

  /// Deterministic substream labels: hash (master, tag, a, b) into a fresh seed.
  static std::uint64_t derive(std::uint64_t master, std::uint64_t tag,
                              std::uint64_t a = 0, std::uint64_t b = 0) {
    return mix(mix(mix(master, tag), a), b);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0,1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0,1); safe as a log/quantile argument.
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 12) + 0.5) * 0x1.0p-52;
  }

  /// Standard normal via Marsaglia polar; consumes a variable number of
  /// uniforms but is fully determined by the stream state.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  /// Standard exponential.
  double exponential() { return -std::log(uniform_open()); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  static std::uint64_t mix(std::uint64_t h, std::uint64_t w) {
    h ^= w + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    std::uint64_t s = h;
    return splitmix64(s);
  }

  std::uint64_t state_[4];
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Substream tags. Keep values stable: output files are reproducible
/// functions of (config, master seed) through these labels.
namespace seeds {
inline constexpr std::uint64_t kInstance = 0x101;
inline constexpr std::uint64_t kMcChunk = 0x102;
inline constexpr std::uint64_t kPbpEdges = 0x103;
inline constexpr std::uint64_t kPbpChunk = 0x104;
inline constexpr std::uint64_t kGapRow = 0x105;
inline constexpr std::uint64_t kDensity = 0x106;
inline constexpr std::uint64_t kBoundMc = 0x107;
inline constexpr std::uint64_t kTailMass = 0x108;
inline constexpr std::uint64_t kBruteForce = 0x109;
}  // namespace seeds

}  // namespace teamlq
