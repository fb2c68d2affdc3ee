#pragma once

// Stationary Gaussian kick fields synthesized as finite random Fourier sums
//
//   V_s(x) = sum_{k=1}^{K} a_k [ xi_{s,k} cos(2 pi k x / L) + eta_{s,k} sin(2 pi k x / L) ]
//
// with iid standard normal coefficients drawn from a counter-based stream
// keyed by (seed_root, s, k). There is no k = 0 component, so the gradient
// has exact zero spatial mean and the kick never shifts the conserved mean.
// The gradient is the term-by-term analytic derivative, not a finite
// difference, so its pointwise second moment is known in closed form.

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "stochflux/grid.hpp"
#include "stochflux/rng.hpp"

namespace stochflux {

struct KickSpec {
  int n_modes = 32;            // K
  double sigma_target = 0.5;   // pointwise standard deviation of V
  double cutoff = 8.0;         // k_c in the spectral envelope exp(-(k/k_c)^2)
  double domain_length = 16.0; // L the wavenumbers 2 pi k / L refer to
  std::uint64_t seed_root = 0;
  std::vector<double> amplitudes;  // a_k, k = 1..K, normalized so sum a_k^2 = sigma^2
};

/// Builds a KickSpec with the default spectral envelope, normalized so that
/// the pointwise variance of V equals sigma_target^2 exactly.
inline KickSpec make_kick_spec(double sigma_target, double cutoff, double domain_length,
                               int n_modes = 32, std::uint64_t seed_root = 0) {
  if (n_modes < 1) throw std::invalid_argument("make_kick_spec: need at least one mode");
  if (!(sigma_target >= 0.0)) throw std::invalid_argument("make_kick_spec: sigma < 0");
  if (!(cutoff > 0.0)) throw std::invalid_argument("make_kick_spec: cutoff <= 0");
  KickSpec spec;
  spec.n_modes = n_modes;
  spec.sigma_target = sigma_target;
  spec.cutoff = cutoff;
  spec.domain_length = domain_length;
  spec.seed_root = seed_root;
  spec.amplitudes.resize(static_cast<std::size_t>(n_modes));
  double sumsq = 0.0;
  for (int k = 1; k <= n_modes; ++k) {
    const double w = std::exp(-(k / cutoff) * (k / cutoff));
    spec.amplitudes[k - 1] = w;
    sumsq += w * w;
  }
  const double scale = (sigma_target > 0.0) ? sigma_target / std::sqrt(sumsq) : 0.0;
  for (double& a : spec.amplitudes) a *= scale;
  return spec;
}

struct KickSample {
  Field potential;       // V_s on the grid
  Field gradient;        // analytic d/dx of the synthesized series
  std::int64_t kick_index = 0;
};

/// Draws the kick with index s. Same (seed_root, s) gives a bit-identical
/// sample; distinct s are independent.
inline KickSample sample_kick(const KickSpec& spec, const Grid& grid, std::int64_t s) {
  if (grid.cells < 8 * spec.n_modes)
    throw std::invalid_argument("sample_kick: grid under-resolves the kick spectrum (need N >= 8K)");
  if (grid.length != spec.domain_length)
    throw std::invalid_argument("sample_kick: grid length does not match the kick spectrum");

  KickSample out{Field(grid), Field(grid), s};
  const double L = grid.length;
  const double two_pi = 6.283185307179586476925286766559;
  const auto su = static_cast<std::uint64_t>(s);
  for (int k = 1; k <= spec.n_modes; ++k) {
    const double a = spec.amplitudes[static_cast<std::size_t>(k - 1)];
    if (a == 0.0) continue;
    const auto [xi, eta] = rng::normal_pair(
        spec.seed_root, static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(su),
        static_cast<std::uint32_t>(su >> 32), rng::Domain::kick);
    const double wavenum = two_pi * k / L;
    for (int i = 0; i < grid.cells; ++i) {
      const double th = wavenum * grid.x(i);
      const double c = std::cos(th);
      const double sn = std::sin(th);
      out.potential[i] += a * (xi * c + eta * sn);
      out.gradient[i] += a * wavenum * (-xi * sn + eta * c);
    }
  }
  return out;
}

/// Closed form of E[(dV/dx)(x)]^2 = sum_k a_k^2 (2 pi k / L)^2, the exact
/// forcing intensity entering the derivative energy bound.
inline double gradient_variance(const KickSpec& spec) {
  const double two_pi = 6.283185307179586476925286766559;
  double s = 0.0;
  for (int k = 1; k <= spec.n_modes; ++k) {
    const double w = two_pi * k / spec.domain_length;
    const double a = spec.amplitudes[static_cast<std::size_t>(k - 1)];
    s += a * a * w * w;
  }
  return s;
}

/// Smooth random field with the kick spectral envelope, drawn from the
/// init_field stream: used for random initial data and random test profiles.
/// Independent of every kick for the same seed.
inline Field random_smooth_field(const Grid& grid, double sigma, double cutoff, int n_modes,
                                 std::uint64_t seed, std::uint32_t index) {
  const KickSpec spec = make_kick_spec(sigma, cutoff, grid.length, n_modes, seed);
  Field out(grid);
  const double two_pi = 6.283185307179586476925286766559;
  for (int k = 1; k <= spec.n_modes; ++k) {
    const double a = spec.amplitudes[static_cast<std::size_t>(k - 1)];
    if (a == 0.0) continue;
    const auto [xi, eta] = rng::normal_pair(seed, static_cast<std::uint32_t>(k), index, 0u,
                                            rng::Domain::init_field);
    const double wavenum = two_pi * k / grid.length;
    for (int i = 0; i < grid.cells; ++i) {
      const double th = wavenum * grid.x(i);
      out[i] += a * (xi * std::cos(th) + eta * std::sin(th));
    }
  }
  return out;
}

struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
  int n_samples = 0;
};

/// Monte Carlo estimate of E exp(-lambda * min_{x in [0,1)} V(x)), the
/// exponential moment of the cell minimum that controls the growth of the
/// transformed field. Gaussian kicks have this moment finite; the estimate
/// quantifies it for the configured spectrum.
inline MomentEstimate check_exp_moment(const KickSpec& spec, const Grid& grid,
                                       double lambda, int n_mc) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("check_exp_moment: lambda must be nonnegative");
  if (n_mc < 100) throw std::invalid_argument("check_exp_moment: need at least 100 samples");
  if (grid.length < 2.0)
    throw std::invalid_argument("check_exp_moment: torus too short for a unit cell");

  // Cells with centers in [0, 1).
  std::vector<int> cell_ids;
  for (int i = 0; i < grid.cells; ++i) {
    const double x = grid.x(i);
    if (x >= 0.0 && x < 1.0) cell_ids.push_back(i);
  }

  KickSpec mc_spec = spec;
  double sum = 0.0, sumsq = 0.0;
  for (int m = 0; m < n_mc; ++m) {
    // Dedicated stream: draw coefficients in the exp_moment domain so the
    // estimate never reuses trajectory kicks.
    Field v(grid);
    const double two_pi = 6.283185307179586476925286766559;
    for (int k = 1; k <= mc_spec.n_modes; ++k) {
      const double a = mc_spec.amplitudes[static_cast<std::size_t>(k - 1)];
      if (a == 0.0) continue;
      const auto [xi, eta] =
          rng::normal_pair(mc_spec.seed_root, static_cast<std::uint32_t>(k),
                           static_cast<std::uint32_t>(m), 0u, rng::Domain::exp_moment);
      const double wavenum = two_pi * k / grid.length;
      for (int i : cell_ids) {
        const double th = wavenum * grid.x(i);
        v[i] += a * (xi * std::cos(th) + eta * std::sin(th));
      }
    }
    double vbar = 0.0;
    if (!cell_ids.empty()) {
      vbar = v[cell_ids.front()];
      for (int i : cell_ids) vbar = std::min(vbar, v[i]);
    }
    const double expo = -lambda * vbar;
    if (expo > 709.0)
      throw std::runtime_error("check_exp_moment: exp overflow at sample " + std::to_string(m));
    const double w = std::exp(expo);
    sum += w;
    sumsq += w * w;
  }
  MomentEstimate est;
  est.n_samples = n_mc;
  est.value = sum / n_mc;
  const double var = (sumsq - sum * sum / n_mc) / (n_mc - 1);
  est.std_error = std::sqrt(std::max(0.0, var) / n_mc);
  return est;
}

}  // namespace stochflux
