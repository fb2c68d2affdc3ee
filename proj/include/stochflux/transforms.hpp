#pragma once

// Potential (Hamilton-Jacobi) reconstruction, the exponential transform
// phi = exp(-lambda h) together with its linear parabolic evolution, and the
// explicit Gaussian-sum majorant used to bound that evolution on unit time
// horizons.
//
// The potential h of a conservation-law trajectory is rebuilt a posteriori:
// spatial antiderivative of u anchored by a fixed unit-mass mollifier, plus
// the time integral of the mollified flux. On the torus h is single-valued
// only for mean-zero u, so the linear part mean(u) * x is tracked separately
// as a slope and h_snapshots hold the periodic remainder.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochflux/grid.hpp"
#include "stochflux/model.hpp"
#include "stochflux/noise.hpp"
#include "stochflux/solver.hpp"

namespace stochflux {

struct PotentialTrajectory {
  Grid grid;
  std::vector<double> times;
  std::vector<Field> h_snapshots;  // periodic part; full h(t,x) = slope*x + snapshot
  double slope = 0.0;              // spatial mean of u, constant along the trajectory
  std::string normalization;       // description of the anchoring mollifier
};

namespace detail {

/// Compactly supported C^2 bump on [-1,1] built from the quintic smoothstep,
/// sampled on the grid and normalized so that dx * sum = 1 exactly.
inline Field anchoring_mollifier(const Grid& g) {
  Field z(g);
  for (int i = 0; i < g.cells; ++i) z[i] = smoothstep5(1.0 - std::abs(g.x(i)));
  double s = 0.0;
  for (double v : z.values) s += v;
  const double norm = g.dx * s;
  for (double& v : z.values) v /= norm;
  return z;
}

/// dx * sum_i zeta_i [kappa(u_i) (du/dx)_i - H(u_i)], the mollified flux
/// functional driving the time part of the potential.
inline double mollified_flux(const Field& u, const Field& zeta_c, const ModelSpec& spec) {
  const Field du = deriv(u);
  double s = 0.0;
  for (int i = 0; i < u.size(); ++i) {
    const double hval = spec.hamiltonian_is_zero ? 0.0 : spec.hamiltonian(u[i]);
    s += zeta_c[i] * (spec.kappa(u[i]) * du[i] - hval);
  }
  return u.grid.dx * s;
}

/// Cumulative trapezoid antiderivative of the mean-zero part of u, anchored
/// so that its mollified average vanishes.
inline Field anchored_antiderivative(const Field& u, double slope, const Field& zeta_c) {
  const int n = u.size();
  const double dx = u.grid.dx;
  Field a(u.grid);
  a[0] = 0.0;
  for (int i = 1; i < n; ++i)
    a[i] = a[i - 1] + 0.5 * dx * ((u[i - 1] - slope) + (u[i] - slope));
  double zavg = 0.0;
  for (int i = 0; i < n; ++i) zavg += zeta_c[i] * a[i];
  zavg *= dx;
  for (int i = 0; i < n; ++i) a[i] -= zavg;
  return a;
}

}  // namespace detail

/// Rebuilds the potential trajectory of a recorded run. The trajectory must
/// carry snapshots; `kicks` must contain exactly the kick samples the run
/// consumed (they are needed to undo the state jump when a time-quadrature
/// panel ends at a kick instant).
inline PotentialTrajectory integrate_hj(const TrajectoryRecord& traj, const ModelSpec& spec,
                                        const std::vector<KickSample>& kicks) {
  if (traj.snapshots.empty())
    throw std::invalid_argument("integrate_hj: trajectory has no stored snapshots");

  std::map<std::int64_t, const KickSample*> by_index;
  for (const KickSample& k : kicks) {
    require_same_grid(traj.snapshots.front(), k.gradient, "integrate_hj");
    by_index[k.kick_index] = &k;
  }
  if (by_index.size() != traj.kick_indices.size())
    throw std::invalid_argument("integrate_hj: kick list does not match the trajectory");
  for (std::int64_t s : traj.kick_indices)
    if (by_index.find(s) == by_index.end())
      throw std::invalid_argument("integrate_hj: missing kick sample for index " +
                                  std::to_string(s));

  const Grid grid = traj.grid;
  const Field zeta_c = detail::anchoring_mollifier(grid);
  const double slope = mean(traj.snapshots.front());

  PotentialTrajectory pot;
  pot.grid = grid;
  pot.slope = slope;
  pot.normalization = "quintic bump on [-1,1], unit discrete mass";
  pot.times = traj.times;
  pot.h_snapshots.reserve(traj.snapshots.size());

  double time_integral = 0.0;
  double prev_time = 0.0;
  double prev_flux = 0.0;
  for (std::size_t j = 0; j < traj.snapshots.size(); ++j) {
    const Field& u = traj.snapshots[j];
    if (std::abs(mean(u) - slope) > 1e-9 * std::max(1.0, std::abs(slope)))
      throw std::runtime_error("integrate_hj: trajectory does not conserve the mean");
    if (j > 0) {
      // close the quadrature panel ending here; if this record sits just
      // after a kick, the panel's right endpoint is the pre-kick state
      double right_flux;
      if (traj.post_kick[j]) {
        Field pre = u;
        const KickSample* k = by_index.at(std::llround(traj.times[j]));
        for (int i = 0; i < pre.size(); ++i) pre[i] -= k->gradient[i];
        right_flux = detail::mollified_flux(pre, zeta_c, spec);
      } else {
        right_flux = detail::mollified_flux(u, zeta_c, spec);
      }
      time_integral += 0.5 * (traj.times[j] - prev_time) * (prev_flux + right_flux);
    }
    Field h = detail::anchored_antiderivative(u, slope, zeta_c);
    for (double& v : h.values) v += time_integral;
    pot.h_snapshots.push_back(std::move(h));
    prev_time = traj.times[j];
    prev_flux = detail::mollified_flux(u, zeta_c, spec);
  }
  return pot;
}

/// Max over records of sup_x |d/dx h + slope - u|; the reconstruction is
/// consistent when this is O(dx^2).
inline double potential_gradient_error(const PotentialTrajectory& pot,
                                       const TrajectoryRecord& traj) {
  if (pot.h_snapshots.size() != traj.snapshots.size())
    throw std::invalid_argument("potential_gradient_error: record counts differ");
  double worst = 0.0;
  for (std::size_t j = 0; j < pot.h_snapshots.size(); ++j) {
    const Field dh = deriv(pot.h_snapshots[j]);
    for (int i = 0; i < dh.size(); ++i)
      worst = std::max(worst, std::abs(dh[i] + pot.slope - traj.snapshots[j][i]));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Exponential transform
// ---------------------------------------------------------------------------

struct HopfField {
  Field phi;
  double lambda_ = 1.0;
};

/// phi = exp(-lambda h). Errors when the exponent leaves the representable
/// range (|lambda h| > 709): rescale h before transforming.
inline HopfField cole_hopf(const Field& h, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("cole_hopf: lambda must be positive");
  HopfField out{Field(h.grid), lambda};
  for (int i = 0; i < h.size(); ++i) {
    const double e = -lambda * h[i];
    if (std::abs(e) > 709.0)
      throw std::runtime_error(
          "cole_hopf: exponent out of range at cell " + std::to_string(i) +
          " (|lambda*h| > 709); rescale the potential");
    out.phi[i] = std::exp(e);
  }
  return out;
}

/// h = -log(phi)/lambda, exact inverse on the representable range.
inline Field inverse_cole_hopf(const HopfField& f) {
  Field out(f.phi.grid);
  for (int i = 0; i < out.size(); ++i) {
    if (!(f.phi[i] > 0.0))
      throw std::runtime_error("inverse_cole_hopf: nonpositive value at cell " +
                               std::to_string(i));
    out[i] = -std::log(f.phi[i]) / f.lambda_;
  }
  return out;
}

/// Max interior residual of d/dt phi = kappa(-phi_x/(lambda phi)) phi_xx
/// + lambda c2 phi over a uniformly spaced record series, using centered
/// differences in time and space, normalized by sup |phi|. Triples whose
/// centered time stencil spans an integer (kick) time are skipped.
inline double hopf_pde_residual(const std::vector<HopfField>& phis,
                                const std::vector<double>& times, const ModelSpec& spec,
                                double c2) {
  if (phis.size() != times.size() || phis.size() < 3)
    throw std::invalid_argument("hopf_pde_residual: need >= 3 aligned records");
  const double lambda = phis.front().lambda_;
  const double dt = times[1] - times[0];
  for (std::size_t j = 1; j < times.size(); ++j)
    if (std::abs(times[j] - times[j - 1] - dt) > 1e-9)
      throw std::invalid_argument("hopf_pde_residual: records not uniformly spaced");

  const Grid grid = phis.front().phi.grid;
  const int n = grid.cells;
  const double dx = grid.dx;
  double supphi = 0.0;
  for (const HopfField& f : phis)
    for (double v : f.phi.values) supphi = std::max(supphi, std::abs(v));

  double worst = 0.0;
  for (std::size_t j = 1; j + 1 < phis.size(); ++j) {
    // Skip stencils containing an integer time in (t_{j-1}, t_{j+1}]: the
    // stored state at a kick instant is the post-jump one, so such a stencil
    // would difference across the jump. An integer at the left endpoint is
    // fine for the same reason.
    const double lo = times[j - 1], hi = times[j + 1];
    if (std::floor(hi + 1e-9) > lo + 1e-9) continue;
    const Field& pm = phis[j - 1].phi;
    const Field& p0 = phis[j].phi;
    const Field& pp = phis[j + 1].phi;
    for (int i = 0; i < n; ++i) {
      const int ip = (i + 1 == n) ? 0 : i + 1;
      const int im = (i == 0) ? n - 1 : i - 1;
      if (!(p0[i] > 0.0))
        throw std::runtime_error("hopf_pde_residual: nonpositive field value");
      const double dphidt = (pp[i] - pm[i]) / (2.0 * dt);
      const double lap = (p0[ip] - 2.0 * p0[i] + p0[im]) / (dx * dx);
      const double grad = (p0[ip] - p0[im]) / (2.0 * dx);
      const double arg = -grad / (lambda * p0[i]);
      const double res = dphidt - spec.kappa(arg) * lap - lambda * c2 * p0[i];
      worst = std::max(worst, std::abs(res));
    }
  }
  return worst / supphi;
}

// ---------------------------------------------------------------------------
// Supersolution majorant
// ---------------------------------------------------------------------------

/// Explicit Gaussian-sum majorant: with a = kappa0^2/2, b = kappa0/4,
/// psi(t,x) = t^-a exp(-b x^2 / t) and B = inf_{|x|<=1/2} psi(1,x), any
/// solution of the linear transformed equation (c2 = 0) with coefficient in
/// [kappa0, 1/kappa0] launched from phi0 >= 0 stays below
///   (1/B) sum_j (sup over the unit cell j of phi0) psi(t+1, x - center_j)
/// for t in (0,1]. The image sum runs over the torus period and as many
/// neighbor copies as needed to make the omitted tail < 1e-12 of the result.
inline Field supersolution_bound(const Field& phi0, double t, double kappa0) {
  if (!(t > 0.0 && t <= 1.0))
    throw std::invalid_argument("supersolution_bound: t must be in (0,1]");
  if (!(kappa0 > 0.0 && kappa0 <= 1.0))
    throw std::invalid_argument("supersolution_bound: kappa0 must be in (0,1]");
  for (int i = 0; i < phi0.size(); ++i)
    if (phi0[i] < 0.0)
      throw std::invalid_argument("supersolution_bound: negative value at cell " +
                                  std::to_string(i));
  const Grid grid = phi0.grid;
  const double L = grid.length;
  const int ncell = static_cast<int>(std::llround(L));
  if (std::abs(L - ncell) > 1e-9 || ncell < 2)
    throw std::invalid_argument("supersolution_bound: torus length must be an integer >= 2");

  const double a = 0.5 * kappa0 * kappa0;
  const double b = 0.25 * kappa0;
  const double B = std::exp(-0.25 * b);  // inf of psi(1,.) on [-1/2,1/2], at the edge
  const double x_left = -0.5 * L;

  // sup of phi0 over each unit interval [x_left + r, x_left + r + 1)
  std::vector<double> cell_sup(static_cast<std::size_t>(ncell), 0.0);
  for (int i = 0; i < grid.cells; ++i) {
    int r = static_cast<int>(std::floor(grid.x(i) - x_left));
    r = std::clamp(r, 0, ncell - 1);
    cell_sup[static_cast<std::size_t>(r)] = std::max(cell_sup[static_cast<std::size_t>(r)], phi0[i]);
  }

  const double tau = t + 1.0;
  const double pref = std::pow(tau, -a) / B;
  auto add_period = [&](Field& out, int p) {
    double added_max = 0.0;
    for (int i = 0; i < grid.cells; ++i) {
      const double x = grid.x(i);
      double s = 0.0;
      for (int r = 0; r < ncell; ++r) {
        const double d = x - (x_left + r + 0.5) - p * L;
        s += cell_sup[static_cast<std::size_t>(r)] * std::exp(-b * d * d / tau);
      }
      out[i] += pref * s;
      added_max = std::max(added_max, pref * s);
    }
    return added_max;
  };

  Field out(grid);
  add_period(out, 0);
  double current_max = 0.0;
  for (double v : out.values) current_max = std::max(current_max, v);
  for (int p = 1; p <= 64; ++p) {
    const double added = add_period(out, p) + add_period(out, -p);
    for (double v : out.values) current_max = std::max(current_max, v);
    if (added < 1e-13 * std::max(current_max, 1e-300)) break;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear evolution of the transformed field
// ---------------------------------------------------------------------------

/// Advances d/dt phi = kappa(-phi_x/(lambda phi)) phi_xx + lambda c2 phi by
/// time s with an explicit positivity-preserving scheme under the diffusive
/// CFL rule. phi0 >= 0 is preserved.
inline Field evolve_hopf(const Field& phi0, double s, const ModelSpec& spec, double lambda,
                         double c2, const SolverConfig& cfg) {
  if (!(s >= 0.0)) throw std::invalid_argument("evolve_hopf: time must be nonnegative");
  if (!(lambda > 0.0)) throw std::invalid_argument("evolve_hopf: lambda must be positive");
  const Grid grid = phi0.grid;
  const int n = grid.cells;
  const double dx = grid.dx;
  double dt_max = cfg.cfl_safety * dx * dx * spec.kappa0 / 2.0;
  if (lambda * std::abs(c2) > 0.0)
    dt_max = std::min(dt_max, cfg.cfl_safety / (lambda * std::abs(c2)));
  dt_max = std::min(dt_max, cfg.max_dt);

  Field phi = phi0;
  Field next(grid);
  double t = 0.0;
  while (t < s) {
    double dt = dt_max;
    const double remaining = s - t;
    bool last = false;
    if (remaining <= dt * (1.0 + 1e-9)) {
      dt = remaining;
      last = true;
    }
    for (int i = 0; i < n; ++i) {
      const int ip = (i + 1 == n) ? 0 : i + 1;
      const int im = (i == 0) ? n - 1 : i - 1;
      const double grad = (phi[ip] - phi[im]) / (2.0 * dx);
      const double arg = (phi[i] > 1e-300) ? -grad / (lambda * phi[i]) : 0.0;
      const double lap = (phi[ip] - 2.0 * phi[i] + phi[im]) / (dx * dx);
      next[i] = phi[i] + dt * (spec.kappa(arg) * lap + lambda * c2 * phi[i]);
    }
    std::swap(phi.values, next.values);
    t = last ? s : t + dt;
    if (last) break;
  }
  return phi;
}

/// Kicked transformed-field path: phi(0-) = 1, multiplicative jumps
/// exp(-lambda V_k) at integers, linear evolution in between. Returns the
/// spatial mean of phi(t-) for t = 1..horizon; the Monte Carlo average of
/// these across seeds estimates E phi(t-,x), whose logarithm grows at most
/// linearly in t.
inline std::vector<double> hopf_growth_path(const Grid& grid, const ModelSpec& spec,
                                            const KickSpec& kick_spec, double lambda,
                                            double c2, int horizon, std::uint64_t seed,
                                            const SolverConfig& cfg) {
  if (horizon < 1) throw std::invalid_argument("hopf_growth_path: horizon must be >= 1");
  KickSpec ks = kick_spec;
  ks.seed_root = seed;
  Field phi(grid, 1.0);
  std::vector<double> means;
  means.reserve(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) {
    const KickSample kick = sample_kick(ks, grid, k);
    for (int i = 0; i < grid.cells; ++i) {
      const double e = -lambda * kick.potential[i];
      if (e > 709.0) throw std::runtime_error("hopf_growth_path: jump factor overflow");
      phi[i] *= std::exp(e);
    }
    phi = evolve_hopf(phi, 1.0, spec, lambda, c2, cfg);
    means.push_back(mean(phi));
  }
  return means;
}

}  // namespace stochflux
