#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string_view>

// Seed-derivation scheme: every random draw in the simulator traces back to
// (master seed, stream name, trial index). Streams are independent SplitMix64
// generators keyed by an FNV-1a hash of the name, so adding trials or new
// streams never perturbs existing ones.

namespace uura {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // uniform in [0, 1)
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  // uniform integer in [0, bound)
  std::uint64_t next_below(std::uint64_t bound) {
    // Lemire-style rejection to avoid modulo bias.
    std::uint64_t x = next_u64();
    __uint128_t m = static_cast<__uint128_t>(x) * bound;
    std::uint64_t lo = static_cast<std::uint64_t>(m);
    if (lo < bound) {
      const std::uint64_t threshold = (-bound) % bound;
      while (lo < threshold) {
        x = next_u64();
        m = static_cast<__uint128_t>(x) * bound;
        lo = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  bool next_bit() { return (next_u64() >> 63) != 0; }

  // standard normal, Box-Muller (pinned algorithm, reproducible across
  // standard libraries)
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  // circular complex Gaussian with E|z|^2 = variance
  std::complex<double> next_cgaussian(double variance = 1.0) {
    const double s = std::sqrt(variance * 0.5);
    return {s * next_gaussian(), s * next_gaussian()};
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

inline std::uint64_t hash_stream_name(std::string_view name) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : name) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Independent generator for (master seed, stream name, index).
inline Rng make_stream(std::uint64_t master_seed, std::string_view stream,
                       std::uint64_t index = 0) {
  Rng mixer(master_seed ^ hash_stream_name(stream));
  const std::uint64_t a = mixer.next_u64();
  Rng folder(a + 0x632be59bd9b4e019ULL * (index + 1));
  return Rng(folder.next_u64());
}

}  // namespace uura
