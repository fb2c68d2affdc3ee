#pragma once

// Explicit finite-volume solver for the unforced conservation law in the
// conserved form
//
//   du/dt = D^2[ K(u) ] - D[ H(u) ],   K(u) = int_0^u kappa,
//
// plus integer-time kicks u -> u + dV/dx and the composed flow map.
//
// The scheme is conservative (flux form, so the cell sum is exact) and
// monotone under the CFL rule below, which makes the structural properties
// of the continuum dynamics -- maximum principle, L1 contraction, comparison
// of ordered data -- hold exactly at the discrete level, step by step.
//
// CFL: each step satisfies both
//   dt <= cfl_safety * dx^2 * kappa0 / 2     (diffusive, using sup kappa <= 1/kappa0)
//   dt <= cfl_safety * dx / max_i |H'(u_i)|  (advective)
// recomputed every step. Any cfl_safety <= 1/2 guarantees monotonicity of
// the update; the default leaves margin.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochflux/grid.hpp"
#include "stochflux/model.hpp"
#include "stochflux/noise.hpp"

namespace stochflux {

enum class FluxScheme { lax_friedrichs_local, engquist_osher };

inline FluxScheme flux_scheme_from_string(const std::string& s) {
  if (s == "lax_friedrichs_local") return FluxScheme::lax_friedrichs_local;
  if (s == "engquist_osher") return FluxScheme::engquist_osher;
  throw std::invalid_argument("unknown flux scheme '" + s + "'");
}

struct SolverConfig {
  double cfl_safety = 0.45;  // <= 1/2 keeps the update monotone
  double max_dt = 0.05;
  FluxScheme flux_scheme = FluxScheme::lax_friedrichs_local;
  double record_every = 0.25;  // diagnostic cadence in time units
};

/// What to measure along a trajectory.
struct DiagnosticsSpec {
  std::vector<double> weighted_ells = {0.5};
  std::vector<int> probe_cells;
  double qmoment_center = 0.0;  // the 'a' in the |u - a|^q time integral
  bool store_snapshots = true;
};

struct DiagnosticsRow {
  double mean = 0.0;
  double l2 = 0.0;
  double h1_seminorm = 0.0;  // l2 norm of the centered derivative
  double sup = 0.0;
  double hamiltonian_mean = 0.0;  // (1/N) sum H(u_i)
  std::vector<double> weighted_sup;
  std::vector<double> probe_values;  // u at the configured probe cells
};

/// Running time integrals accumulated every step (left endpoint rule), so
/// time averages are free of record-cadence quadrature error across kicks.
struct IntegralsSnapshot {
  double time = 0.0;            // integrated time since t_begin
  double int_grad_sq = 0.0;     // integral of (1/N) sum (centered du/dx)^2
  double int_hamiltonian = 0.0; // integral of (1/N) sum H(u_i)
  double int_qmoment = 0.0;     // integral of (1/N) sum |u_i - a|^q
  std::vector<double> int_probe;
};

struct TrajectoryRecord {
  Grid grid;
  double t_begin = 0.0;
  double t_end = 0.0;
  std::vector<double> times;
  std::vector<std::uint8_t> post_kick;  // 1 if the snapshot is the state just after a kick
  std::vector<DiagnosticsRow> diagnostics;
  std::vector<IntegralsSnapshot> integrals;
  std::vector<Field> snapshots;  // empty unless requested
  std::vector<std::int64_t> kick_indices;
  Field final_field;
};

namespace detail {

/// Per-trajectory work buffers and the fused step kernel. The per-cell model
/// tables are specialized for the builtin families; custom models fall back
/// to the std::function path.
class UnforcedStepper {
 public:
  UnforcedStepper(const ModelSpec& spec, const SolverConfig& cfg, const Grid& grid)
      : spec_(spec), cfg_(cfg), grid_(grid), n_(grid.cells) {
    spec_.check_constants();
    kp_.assign(n_ + 2, 0.0);
    ug_.assign(n_ + 2, 0.0);
    hv_.assign(n_ + 2, 0.0);
    hp_.assign(n_ + 2, 0.0);
    flux_.assign(n_ + 1, 0.0);
    if (cfg_.flux_scheme == FluxScheme::engquist_osher) {
      hplus_.assign(n_ + 2, 0.0);
      hminus_.assign(n_ + 2, 0.0);
    }
    dt_diffusive_ = cfg_.cfl_safety * grid_.dx * grid_.dx * spec_.kappa0 / 2.0;
  }

  const Grid& grid() const { return grid_; }
  const ModelSpec& spec() const { return spec_; }

  /// Fills the model tables for the current state and returns the largest
  /// CFL-admissible dt.
  double prepare(const Field& u) {
    fill_tables(u);
    double dt = dt_diffusive_;
    if (amax_ > 0.0) dt = std::min(dt, cfg_.cfl_safety * grid_.dx / amax_);
    return dt;
  }

  /// One forward Euler step of size dt (prepare must have been called for
  /// this state). Accumulates the running time integrals at the pre-step
  /// state and leaves the new state in u.
  void advance(Field& u, double dt, IntegralsSnapshot* acc, double qmoment_center,
               const std::vector<int>& probe_cells) {
    const int n = n_;
    const double dx = grid_.dx;
    const double ddif = dt / (dx * dx);
    const double dadv = dt / dx;

    const double* ug = ug_.data();
    const double* kp = kp_.data();
    double* f = flux_.data();
    if (cfg_.flux_scheme == FluxScheme::lax_friedrichs_local) {
      const double* hv = hv_.data();
      const double* hp = hp_.data();
      for (int j = 0; j <= n; ++j) {
        const double a = std::max(hp[j], hp[j + 1]);
        f[j] = 0.5 * (hv[j] + hv[j + 1]) - 0.5 * a * (ug[j + 1] - ug[j]);
      }
    } else {
      const double* fp = hplus_.data();
      const double* fm = hminus_.data();
      for (int j = 0; j <= n; ++j) f[j] = fp[j] + fm[j + 1];
    }

    double* out = u.values.data();
    double gradsq = 0.0, qsum = 0.0, check = 0.0;
    const double a0 = qmoment_center;
    const int qkind = q_kind();
    for (int i = 0; i < n; ++i) {
      const int j = i + 1;
      const double v = ug[j] + ddif * (kp[j + 1] - 2.0 * kp[j] + kp[j - 1]) -
                       dadv * (f[j] - f[j - 1]);
      out[i] = v;
      check += v;
      const double du = ug[j + 1] - ug[j - 1];
      gradsq += du * du;
      const double dev = std::abs(ug[j] - a0);
      if (qkind == 0)
        qsum += dev * dev;
      else if (qkind == 1)
        qsum += dev * std::sqrt(dev);
      else
        qsum += std::pow(dev, spec_.q);
    }
    if (!std::isfinite(check)) {
      for (int i = 0; i < n; ++i)
        if (!std::isfinite(out[i]))
          throw std::runtime_error("step_unforced: non-finite value produced at cell " +
                                   std::to_string(i) + ", step " + std::to_string(steps_));
    }
    ++steps_;
    if (acc) {
      acc->time += dt;
      acc->int_grad_sq += dt * gradsq / (4.0 * dx * dx * n);
      acc->int_hamiltonian += dt * ham_sum_ / n;
      acc->int_qmoment += dt * qsum / n;
      for (std::size_t p = 0; p < probe_cells.size(); ++p)
        acc->int_probe[p] += dt * ug[probe_cells[p] + 1];
    }
  }

  std::int64_t steps() const { return steps_; }

 private:
  int q_kind() const {
    if (spec_.q == 2.0) return 0;
    if (spec_.q == 1.5) return 1;
    return 2;
  }

  template <class KFn, class HFn, class HpFn>
  void fill_core(const double* u, KFn kfn, HFn hfn, HpFn hpfn) {
    const int n = n_;
    double amax = 0.0, hsum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double v = u[i];
      ug_[i + 1] = v;
      kp_[i + 1] = kfn(v);
      const double h = hfn(v);
      hv_[i + 1] = h;
      hsum += h;
      const double ap = hpfn(v);
      hp_[i + 1] = ap;
      amax = std::max(amax, ap);
    }
    amax_ = amax;
    ham_sum_ = hsum;
  }

  void fill_tables(const Field& u) {
    if (u.grid != grid_) throw std::invalid_argument("stepper: field grid mismatch");
    const double* p = u.values.data();
    if (spec_.hamiltonian_is_zero) {
      switch (spec_.family) {
        case ModelFamily::burgers:
          fill_core(
              p, [](double v) { return v; }, [](double) { return 0.0; },
              [](double) { return 0.0; });
          break;
        case ModelFamily::tanh_subquadratic:
          fill_core(
              p, [](double v) { return kprim_tanh(v); }, [](double) { return 0.0; },
              [](double) { return 0.0; });
          break;
        default:
          fill_core(
              p, [this](double v) { return kappa_primitive(spec_, v); },
              [](double) { return 0.0; }, [](double) { return 0.0; });
      }
    } else {
      switch (spec_.family) {
        case ModelFamily::burgers:
          fill_core(
              p, [](double v) { return v; }, [](double v) { return 0.5 * v * v; },
              [](double v) { return std::abs(v); });
          break;
        case ModelFamily::tanh_subquadratic:
          fill_core(
              p, [](double v) { return kprim_tanh(v); },
              [](double v) {
                const double t = 1.0 + v * v;
                return t / std::sqrt(std::sqrt(t)) - 1.0;
              },
              [](double v) {
                const double t = 1.0 + v * v;
                return 1.5 * std::abs(v) / std::sqrt(std::sqrt(t));
              });
          break;
        default:
          fill_core(
              p, [this](double v) { return kappa_primitive(spec_, v); },
              [this](double v) { return spec_.hamiltonian(v); },
              [this](double v) { return std::abs(spec_.hamiltonian_prime(v)); });
      }
    }
    // periodic padding
    ug_[0] = ug_[n_];
    ug_[n_ + 1] = ug_[1];
    kp_[0] = kp_[n_];
    kp_[n_ + 1] = kp_[1];
    hv_[0] = hv_[n_];
    hv_[n_ + 1] = hv_[1];
    hp_[0] = hp_[n_];
    hp_[n_ + 1] = hp_[1];
    if (cfg_.flux_scheme == FluxScheme::engquist_osher) {
      const double ustar = spec_.h_argmin;
      const double hstar = spec_.hamiltonian_is_zero ? 0.0 : spec_.hamiltonian(ustar);
      for (int i = 1; i <= n_; ++i) {
        const double v = ug_[i];
        hplus_[i] = (v > ustar) ? hv_[i] - hstar : 0.0;
        hminus_[i] = (v < ustar) ? hv_[i] - hstar : 0.0;
      }
      hplus_[0] = hplus_[n_];
      hplus_[n_ + 1] = hplus_[1];
      hminus_[0] = hminus_[n_];
      hminus_[n_ + 1] = hminus_[1];
    }
  }

  static double kprim_tanh(double v) {
    // u + log(cosh u)/2 without overflow for large |u|
    const double a = std::abs(v);
    return v + 0.5 * (a + std::log1p(std::exp(-2.0 * a)) - 0.6931471805599453094);
  }

  ModelSpec spec_;
  SolverConfig cfg_;
  Grid grid_;
  int n_;
  double dt_diffusive_ = 0.0;
  double amax_ = 0.0;
  double ham_sum_ = 0.0;
  std::int64_t steps_ = 0;
  std::vector<double> kp_, ug_, hv_, hp_, flux_, hplus_, hminus_;
};

}  // namespace detail

/// One explicit step from u with the largest admissible dt (also capped by
/// cfg.max_dt). Returns the new state and the dt actually used.
inline std::pair<Field, double> step_unforced(const Field& u, const ModelSpec& spec,
                                              const SolverConfig& cfg) {
  detail::UnforcedStepper st(spec, cfg, u.grid);
  const double dt = std::min(st.prepare(u), cfg.max_dt);
  Field out = u;
  st.advance(out, dt, nullptr, 0.0, {});
  return {std::move(out), dt};
}

/// Time-s map of the unforced dynamics; the final step is clipped to land
/// exactly on s. psi(u, 0) is the identity.
inline Field psi(const Field& u0, double s, const ModelSpec& spec, const SolverConfig& cfg) {
  if (!(s >= 0.0)) throw std::invalid_argument("psi: time must be nonnegative");
  Field u = u0;
  if (s == 0.0) return u;
  detail::UnforcedStepper st(spec, cfg, u.grid);
  double t = 0.0;
  while (t < s) {
    double dt = std::min(st.prepare(u), cfg.max_dt);
    const double remaining = s - t;
    if (remaining <= dt * (1.0 + 1e-9)) {
      st.advance(u, remaining, nullptr, 0.0, {});
      break;
    }
    st.advance(u, dt, nullptr, 0.0, {});
    t += dt;
  }
  return u;
}

/// Adds the kick gradient pointwise; the spatial mean is unchanged because
/// the synthesized gradient has exact zero mean.
inline Field apply_kick(const Field& u, const KickSample& kick) {
  require_same_grid(u, kick.gradient, "apply_kick");
  Field out = u;
  for (int i = 0; i < out.size(); ++i) out[i] += kick.gradient[i];
  return out;
}

namespace detail {

struct FlowEvent {
  double t;
  bool kick;
};

/// Merged, strictly increasing list of kick instants and record instants in
/// (t0, t1], with t1 always present.
inline std::vector<FlowEvent> flow_events(double t0, double t1, double record_every) {
  constexpr double eps = 1e-9;
  std::vector<FlowEvent> ev;
  for (std::int64_t s = static_cast<std::int64_t>(std::floor(t0 + eps)) + 1;
       s < t1 - eps; ++s) {
    if (s > t0 + eps) ev.push_back({static_cast<double>(s), true});
  }
  if (record_every > 0.0) {
    for (int m = 1;; ++m) {
      const double t = t0 + m * record_every;
      if (t >= t1 - eps) break;
      ev.push_back({t, false});
    }
  }
  ev.push_back({t1, false});
  std::sort(ev.begin(), ev.end(), [](const FlowEvent& a, const FlowEvent& b) { return a.t < b.t; });
  std::vector<FlowEvent> merged;
  for (const FlowEvent& e : ev) {
    if (!merged.empty() && std::abs(merged.back().t - e.t) < eps) {
      merged.back().kick = merged.back().kick || e.kick;
      merged.back().t = e.kick ? e.t : merged.back().t;  // prefer the exact integer
    } else {
      merged.push_back(e);
    }
  }
  return merged;
}

inline DiagnosticsRow make_diagnostics_row(const Field& u, const ModelSpec& spec,
                                           const DiagnosticsSpec& diag) {
  DiagnosticsRow row;
  row.mean = mean(u);
  row.l2 = l2_norm(u);
  row.h1_seminorm = l2_norm(deriv(u));
  row.sup = sup_norm(u);
  double hs = 0.0;
  if (!spec.hamiltonian_is_zero)
    for (double v : u.values) hs += spec.hamiltonian(v);
  row.hamiltonian_mean = hs / u.size();
  row.weighted_sup.reserve(diag.weighted_ells.size());
  for (double ell : diag.weighted_ells)
    row.weighted_sup.push_back(weighted_sup_norm(u, WeightTag::poly(ell)));
  row.probe_values.reserve(diag.probe_cells.size());
  for (int c : diag.probe_cells) row.probe_values.push_back(u[c]);
  return row;
}

}  // namespace detail

/// Evolves a group of initial states from t0- to t1- under one shared noise
/// realization: every member receives the identical kick samples and all
/// members take identical step sizes (the minimum of the per-member CFL
/// limits), so comparison-principle statements are scheme-exact across the
/// group. A kick at integer t0 is applied first (initial data is the state
/// just before that kick); the kick at t1 is not consumed.
inline std::vector<TrajectoryRecord> phi_flow_group(
    const std::vector<Field>& initials, double t0, double t1, const ModelSpec& spec,
    const KickSpec& kick_spec, const SolverConfig& cfg, std::uint64_t seed,
    const DiagnosticsSpec& diag = DiagnosticsSpec{}) {
  if (initials.empty()) throw std::invalid_argument("phi_flow_group: no initial data");
  if (!(t0 >= 0.0 && t1 >= t0)) throw std::invalid_argument("phi_flow_group: need 0 <= t0 <= t1");
  const Grid grid = initials.front().grid;
  for (const Field& f : initials) require_same_grid(initials.front(), f, "phi_flow_group");
  constexpr double eps = 1e-9;

  const std::size_t m = initials.size();
  std::vector<Field> u = initials;
  std::vector<detail::UnforcedStepper> steppers;
  steppers.reserve(m);
  for (std::size_t i = 0; i < m; ++i) steppers.emplace_back(spec, cfg, grid);

  std::vector<TrajectoryRecord> recs(m);
  std::vector<IntegralsSnapshot> accs(m);
  for (std::size_t i = 0; i < m; ++i) {
    recs[i].grid = grid;
    recs[i].t_begin = t0;
    recs[i].t_end = t1;
    accs[i].int_probe.assign(diag.probe_cells.size(), 0.0);
  }

  KickSpec ks = kick_spec;
  ks.seed_root = seed;

  auto do_kick = [&](std::int64_t s) {
    const KickSample kick = sample_kick(ks, grid, s);
    for (std::size_t i = 0; i < m; ++i) {
      for (int c = 0; c < grid.cells; ++c) u[i][c] += kick.gradient[c];
      recs[i].kick_indices.push_back(s);
    }
  };
  auto do_record = [&](double t, bool post) {
    for (std::size_t i = 0; i < m; ++i) {
      recs[i].times.push_back(t);
      recs[i].post_kick.push_back(post ? 1 : 0);
      recs[i].diagnostics.push_back(detail::make_diagnostics_row(u[i], spec, diag));
      recs[i].integrals.push_back(accs[i]);
      if (diag.store_snapshots) recs[i].snapshots.push_back(u[i]);
    }
  };

  const bool degenerate = !(t1 > t0 + eps);  // Phi_{t,t} = id
  const bool kick_at_start = !degenerate && std::abs(t0 - std::round(t0)) < eps;
  if (kick_at_start) do_kick(std::llround(t0));
  do_record(t0, kick_at_start);

  double t = t0;
  if (!degenerate) {
    for (const detail::FlowEvent& ev : detail::flow_events(t0, t1, cfg.record_every)) {
      // advance everyone to ev.t with shared steps
      while (t < ev.t - eps) {
        double dt = cfg.max_dt;
        for (std::size_t i = 0; i < m; ++i) dt = std::min(dt, steppers[i].prepare(u[i]));
        const double remaining = ev.t - t;
        bool last = false;
        if (remaining <= dt * (1.0 + 1e-9)) {
          dt = remaining;
          last = true;
        }
        for (std::size_t i = 0; i < m; ++i)
          steppers[i].advance(u[i], dt, &accs[i], diag.qmoment_center, diag.probe_cells);
        t = last ? ev.t : t + dt;
      }
      t = ev.t;
      if (ev.kick) do_kick(std::llround(ev.t));
      do_record(ev.t, ev.kick);
    }
  }

  for (std::size_t i = 0; i < m; ++i) recs[i].final_field = u[i];
  return recs;
}

/// Single-trajectory flow map u(t0-) -> u(t1-) with diagnostics.
inline TrajectoryRecord phi_flow(const Field& u_init, double t0, double t1,
                                 const ModelSpec& spec, const KickSpec& kick_spec,
                                 const SolverConfig& cfg, std::uint64_t seed,
                                 const DiagnosticsSpec& diag = DiagnosticsSpec{}) {
  return phi_flow_group({u_init}, t0, t1, spec, kick_spec, cfg, seed, diag).front();
}

/// Two trajectories under the same noise realization and shared step sizes.
inline std::pair<TrajectoryRecord, TrajectoryRecord> evolve_pair_same_noise(
    const Field& u_init, const Field& v_init, double t0, double t1, const ModelSpec& spec,
    const KickSpec& kick_spec, const SolverConfig& cfg, std::uint64_t seed,
    const DiagnosticsSpec& diag = DiagnosticsSpec{}) {
  auto recs = phi_flow_group({u_init, v_init}, t0, t1, spec, kick_spec, cfg, seed, diag);
  return {std::move(recs[0]), std::move(recs[1])};
}

}  // namespace stochflux
