#pragma once

#include <cstdint>
#include <cmath>

namespace gffil {

// Counter-keyed random streams. Every logical unit of work (a sample, a
// trajectory, a vertex draw) gets its own stream derived from
// (seed, module id, index...), so results do not depend on thread schedule.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stream identifiers, one per module that consumes randomness.
enum class StreamId : std::uint64_t {
  Gff = 1,
  Interlacement = 2,
  SoftLocal = 3,
  ExitTime = 4,
  Coupling = 5,
  EightSet = 6,
  Percolation = 7,
  Decoupling = 8,
  Bridge = 9,
  Generic = 15,
};

class Rng {
 public:
  Rng(std::uint64_t seed, StreamId sid, std::uint64_t index0 = 0,
      std::uint64_t index1 = 0) {
    std::uint64_t k = seed;
    k = splitmix64(k ^ (0x1000 + static_cast<std::uint64_t>(sid)));
    k = splitmix64(k ^ index0);
    k = splitmix64(k ^ index1);
    for (auto& w : s_) {
      k = splitmix64(k);
      w = k;
    }
    have_gauss_ = false;
  }

  std::uint64_t next() {
    // xoshiro256++
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // uniform in [0,1)
  double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // uniform in (0,1]
  double u01_open0() {
    return (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
  }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    // Lemire-style rejection keeps the draw unbiased.
    std::uint64_t x = next();
    __uint128_t m = static_cast<__uint128_t>(x) * n;
    std::uint64_t l = static_cast<std::uint64_t>(m);
    if (l < n) {
      std::uint64_t t = (0 - n) % n;
      while (l < t) {
        x = next();
        m = static_cast<__uint128_t>(x) * n;
        l = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

  double exponential() { return -std::log(u01_open0()); }

  // standard normal, polar method (pair cached)
  double gauss() {
    if (have_gauss_) {
      have_gauss_ = false;
      return gauss_;
    }
    double a, b, q;
    do {
      a = 2.0 * u01() - 1.0;
      b = 2.0 * u01() - 1.0;
      q = a * a + b * b;
    } while (q >= 1.0 || q == 0.0);
    const double f = std::sqrt(-2.0 * std::log(q) / q);
    gauss_ = b * f;
    have_gauss_ = true;
    return a * f;
  }

  std::uint64_t poisson(double mean) {
    // inversion for small means, normal-refined PTRS-free fallback via
    // splitting for large means (exact: sum of independent Poissons)
    std::uint64_t total = 0;
    while (mean > 32.0) {
      // split off a Poisson(16) block by inversion
      total += poisson_inversion(16.0);
      mean -= 16.0;
    }
    return total + poisson_inversion(mean);
  }

 private:
  std::uint64_t poisson_inversion(double mean) {
    if (mean <= 0.0) return 0;
    const double l = std::exp(-mean);
    double p = 1.0;
    std::uint64_t k = 0;
    do {
      ++k;
      p *= u01_open0();
    } while (p > l);
    return k - 1;
  }

  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
  double gauss_ = 0.0;
  bool have_gauss_;
};

}  // namespace gffil
