#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

#include "logz/errors.hpp"

namespace logz {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Domain-separation tags for stream derivation. Library code and oracle code
// never draw from the same stream even when handed the same user seed.
namespace stream {
inline constexpr uint64_t kMonteCarlo = 0x01;
inline constexpr uint64_t kCodebook = 0x02;
inline constexpr uint64_t kChannel = 0x03;
inline constexpr uint64_t kModelGen = 0x04;
inline constexpr uint64_t kOracleMc = 0x11;
inline constexpr uint64_t kOracleIs = 0x12;
inline constexpr uint64_t kOracleBootstrap = 0x13;
}  // namespace stream

// Counter-based generator: the i-th output is a pure function of (key, i).
// Streams derived from (seed, tags..., index) can therefore be assigned to
// workers in any order without changing any drawn value.
class CounterRng {
 public:
  explicit CounterRng(uint64_t key) : key_(key) {}

  static uint64_t derive(uint64_t seed, std::initializer_list<uint64_t> tags) {
    uint64_t k = splitmix64(seed ^ 0xA02B8F1D5C3E7A91ULL);
    for (uint64_t t : tags) k = splitmix64(k ^ splitmix64(t ^ 0xC6A4A7935BD1E995ULL));
    return k;
  }

  static CounterRng make(uint64_t seed, std::initializer_list<uint64_t> tags) {
    return CounterRng(derive(seed, tags));
  }

  uint64_t next_u64() {
    uint64_t x = key_ ^ (counter_++ * 0x9E3779B97F4A7C15ULL);
    return splitmix64(splitmix64(x));
  }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1]; safe as a log() argument.
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Marsaglia-Tsang; requires shape >= 1 (all uses here have integer-ish
  // shapes well above 1).
  double gamma(double shape) {
    if (shape < 1.0) throw DomainError("gamma sampler requires shape >= 1");
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x, v;
      do {
        x = gaussian();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_pos();
      if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
    }
  }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace logz
