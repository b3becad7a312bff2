/**
 * @file rng.hpp
 * @brief Counter-based random numbers.
 *
 * Every draw is a pure function of (key, counter), so samples can be produced
 * in any order or on any thread and still come out bit-identical. Uniforms are
 * turned into other distributions by explicit inverse-CDF formulas rather than
 * <random> distributions, whose output is implementation-defined.
 */
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace csifb {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_key(std::uint64_t a, std::uint64_t b) {
  return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
}

class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream,
                       std::uint64_t substream = 0)
      : key_(mix_key(mix_key(seed, stream), substream)) {}

  constexpr std::uint64_t next_u64() { return splitmix64(key_ ^ splitmix64(counter_++)); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double unit_phase() { return 2.0 * std::numbers::pi * uniform(); }

  /// Laplace(mean, scale) by inverse CDF.
  double laplace(double mean, double scale) {
    const double u = uniform() - 0.5;
    const double mag = -scale * std::log1p(-2.0 * std::abs(u));
    return u < 0.0 ? mean - mag : mean + mag;
  }

  /// Exponential(mean) truncated to [0, upper].
  double truncated_exponential(double mean, double upper) {
    const double mass = -std::expm1(-upper / mean);
    return -mean * std::log1p(-uniform() * mass);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace csifb
