/*
 * rng.hpp — counter-based random number generation.
 *
 * Every draw is a pure function of (seed, key...), so simulations are
 * reproducible and two integrators can share noise streams by using the
 * same keys. Keys are typically (step, agent, axis).
 */

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace opdyn {

inline constexpr double kPi = 3.14159265358979323846;

// splitmix64 finalizer, used as a mixing function
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t hash_key(std::uint64_t seed, std::uint64_t a,
                              std::uint64_t b = 0, std::uint64_t c = 0,
                              std::uint64_t d = 0) {
  std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
  h = mix64(h ^ a);
  h = mix64(h ^ b);
  h = mix64(h ^ c);
  h = mix64(h ^ d);
  return h;
}

// uniform in the open interval (0,1); never returns 0 or 1
inline double to_unit_open(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

inline double uniform_at(std::uint64_t seed, std::uint64_t a,
                         std::uint64_t b = 0, std::uint64_t c = 0,
                         std::uint64_t d = 0) {
  return to_unit_open(hash_key(seed, a, b, c, d));
}

// standard normal via Box-Muller on two decorrelated hashes
inline double normal_at(std::uint64_t seed, std::uint64_t a,
                        std::uint64_t b = 0, std::uint64_t c = 0,
                        std::uint64_t d = 0) {
  const std::uint64_t h1 = hash_key(seed, a, b, c, d);
  const std::uint64_t h2 = mix64(h1 ^ 0xd1b54a32d192ed03ULL);
  const double u1 = to_unit_open(h1);
  const double u2 = to_unit_open(h2);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

// Sequential stream view over the counter space, for samplers that
// consume a variable number of draws (rejection loops).
class RngStream {
public:
  RngStream(std::uint64_t seed, std::uint64_t stream_a,
            std::uint64_t stream_b = 0)
      : key_(hash_key(seed, stream_a, stream_b, 0x5eedULL)) {}

  double uniform() { return to_unit_open(next()); }

  double normal() {
    const double u1 = to_unit_open(next());
    const double u2 = to_unit_open(next());
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

  // Gamma(shape, 1) by Marsaglia-Tsang; shape < 1 boosted via U^{1/a}
  double gamma(double shape) {
    if (!(shape > 0.0)) throw std::domain_error("gamma: shape must be > 0");
    if (shape < 1.0) {
      const double u = uniform();
      return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = uniform();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  // Beta(a, b) variate from two gammas
  double beta(double a, double b) {
    const double x = gamma(a);
    const double y = gamma(b);
    return x / (x + y);
  }

private:
  std::uint64_t next() { return state_ = mix64(state_ ^ key_); }

  std::uint64_t key_;
  std::uint64_t state_ = 0x243f6a8885a308d3ULL;
};

} // namespace opdyn
