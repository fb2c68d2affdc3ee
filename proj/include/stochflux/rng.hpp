#pragma once

// Counter-based random number generation (Philox4x32-10).
//
// Every random draw in the library is a pure function of a 64-bit seed and a
// 128-bit counter, so kicks, Monte Carlo samples, and random initial data can
// be generated out of order, re-generated for replay, and distributed over
// workers without any stream coordination.

#include <cmath>
#include <cstdint>
#include <utility>

namespace stochflux::rng {

/// Counter word 3 tags the purpose of a stream so that independent uses of
/// the same seed never collide.
enum class Domain : std::uint32_t {
  kick = 1,         // kick field Fourier coefficients, c0 = mode, c1/c2 = kick index
  exp_moment = 2,   // Monte Carlo samples for the exponential-moment estimate
  init_field = 3,   // random initial data for experiments
  misc = 4,
};

namespace detail {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

struct Block {
  std::uint32_t x[4];
};

inline Block philox4x32_10(std::uint32_t c0, std::uint32_t c1, std::uint32_t c2,
                           std::uint32_t c3, std::uint32_t k0, std::uint32_t k1) {
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * c0;
    const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * c2;
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
    c0 = hi1 ^ c1 ^ k0;
    c1 = lo1;
    c2 = hi0 ^ c3 ^ k1;
    c3 = lo0;
    k0 += kPhiloxW0;
    k1 += kPhiloxW1;
  }
  return Block{{c0, c1, c2, c3}};
}

}  // namespace detail

/// SplitMix64 finalizer; used to derive independent per-path sub-seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed for ensemble path `p` derived from the experiment seed root.
inline std::uint64_t path_seed(std::uint64_t seed_root, int path) {
  return mix64(seed_root ^ (0x9E3779B97F4A7C15ull * static_cast<std::uint64_t>(path + 1)));
}

/// Two independent uniforms: first in (0,1], second in [0,1).
inline std::pair<double, double> uniform_pair(std::uint64_t seed, std::uint32_t c0,
                                              std::uint32_t c1, std::uint32_t c2,
                                              Domain domain) {
  const detail::Block b = detail::philox4x32_10(
      c0, c1, c2, static_cast<std::uint32_t>(domain),
      static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32));
  const std::uint64_t a = (static_cast<std::uint64_t>(b.x[0]) << 32) | b.x[1];
  const std::uint64_t c = (static_cast<std::uint64_t>(b.x[2]) << 32) | b.x[3];
  const double u1 = static_cast<double>((a >> 11) + 1) * 0x1.0p-53;
  const double u2 = static_cast<double>(c >> 11) * 0x1.0p-53;
  return {u1, u2};
}

/// Two independent standard normals (Box-Muller), a pure function of the key.
inline std::pair<double, double> normal_pair(std::uint64_t seed, std::uint32_t c0,
                                             std::uint32_t c1, std::uint32_t c2,
                                             Domain domain) {
  const auto [u1, u2] = uniform_pair(seed, c0, c1, c2, domain);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 6.283185307179586476925286766559 * u2;
  return {r * std::cos(theta), r * std::sin(theta)};
}

}  // namespace stochflux::rng
