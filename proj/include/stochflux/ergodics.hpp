#pragma once

// Monte Carlo ensemble experiments over the kicked dynamics: time-averaged
// moment statistics from constant initial data, contraction and ordering
// under shared noise, and the stabilization diagnostics of time-averaged
// laws. Paths are independent work units keyed by (seed_root, path index);
// merges are pairwise over the path index, so results are identical for any
// worker count and completion order.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "stochflux/grid.hpp"
#include "stochflux/model.hpp"
#include "stochflux/noise.hpp"
#include "stochflux/rng.hpp"
#include "stochflux/solver.hpp"
#include "stochflux/stats.hpp"

namespace stochflux {

struct PropertyCheck {
  std::string name;
  bool pass = false;
  double margin = 0.0;  // >= 0 means satisfied with this much room
  std::string detail;
};

/// Runs fn(0..n-1), optionally on a small thread pool. Callers store results
/// by index; the reduction step is deterministic regardless of scheduling.
template <class Fn>
void parallel_paths(int workers, int n, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto body = [&] {
    for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int nw = std::min(workers, n);
  pool.reserve(static_cast<std::size_t>(nw));
  for (int w = 0; w < nw; ++w) pool.emplace_back(body);
  for (std::thread& t : pool) t.join();
  for (int i = 0; i < n; ++i)
    if (errors[static_cast<std::size_t>(i)]) std::rethrow_exception(errors[static_cast<std::size_t>(i)]);
}

struct SeriesWithError {
  std::vector<double> mean;
  std::vector<double> se;
};

namespace detail {

/// Across-path mean/se at every index, reduced pairwise over paths.
inline SeriesWithError across_paths(const std::vector<std::vector<double>>& per_path) {
  SeriesWithError out;
  if (per_path.empty()) return out;
  const std::size_t len = per_path.front().size();
  const std::size_t m = per_path.size();
  out.mean.resize(len);
  out.se.resize(len);
  std::vector<double> column(m);
  for (std::size_t k = 0; k < len; ++k) {
    for (std::size_t p = 0; p < m; ++p) column[p] = per_path[p][k];
    const auto ms = stats::mean_se(column);
    out.mean[k] = ms.mean;
    out.se[k] = ms.se;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Time-averaged moments from constant initial data
// ---------------------------------------------------------------------------

struct EnsembleStats {
  int n_paths = 0;
  double horizon = 0.0;
  double burn_in = 0.0;
  double initial_mean = 0.0;            // the constant a
  std::vector<double> times;            // record times (shared by all paths)
  SeriesWithError grad_energy;          // (1/t) int (1/N) sum (du/dx)^2
  SeriesWithError hamiltonian;          // (1/t) int (1/N) sum H(u)
  SeriesWithError q_moment;             // (1/t) int (1/N) sum |u - a|^q
  SeriesWithError probe_mean;           // (1/t) int u(t, x_probe)
  double spatial_mean_max_dev = 0.0;    // max |mean(u) - a| over paths and records
};

struct InvariantResult {
  EnsembleStats stats;
  std::vector<PropertyCheck> checks;
};

/// M independent kicked trajectories from u(0-) = a, with the derivative
/// energy bound, exact mean conservation, and the probe-cell mean identity
/// asserted at Monte Carlo tolerance (3 standard errors where applicable).
inline InvariantResult invariant_estimate(double a, const Grid& grid, const ModelSpec& spec,
                                          const KickSpec& kick_spec, const SolverConfig& cfg,
                                          int n_paths, double horizon, std::uint64_t seed,
                                          int workers = 1, std::vector<int> probe_cells = {}) {
  if (n_paths < 8) throw std::invalid_argument("invariant_estimate: need >= 8 paths");
  if (!(horizon >= 4.0)) throw std::invalid_argument("invariant_estimate: need T >= 4");
  if (probe_cells.empty()) probe_cells = {grid.cells / 4, (3 * grid.cells) / 4};

  DiagnosticsSpec diag;
  diag.probe_cells = probe_cells;
  diag.qmoment_center = a;
  diag.store_snapshots = false;

  const int m = n_paths;
  std::vector<std::vector<double>> grad(m), ham(m), qmom(m), probe(m);
  std::vector<double> mean_dev(static_cast<std::size_t>(m), 0.0);
  std::vector<std::vector<double>> times_by_path(m);

  parallel_paths(workers, m, [&](int p) {
    const Field init(grid, a);
    TrajectoryRecord rec;
    try {
      rec = phi_flow(init, 0.0, horizon, spec, kick_spec, cfg, rng::path_seed(seed, p), diag);
    } catch (const std::exception& e) {
      throw std::runtime_error("path " + std::to_string(p) + " (seed " +
                               std::to_string(rng::path_seed(seed, p)) + "): " + e.what());
    }
    const std::size_t len = rec.times.size();
    auto& g = grad[p];
    auto& h = ham[p];
    auto& q = qmom[p];
    auto& pr = probe[p];
    g.resize(len);
    h.resize(len);
    q.resize(len);
    pr.resize(len);
    double dev = 0.0;
    for (std::size_t k = 0; k < len; ++k) {
      const IntegralsSnapshot& I = rec.integrals[k];
      const double t = I.time;
      g[k] = t > 0.0 ? I.int_grad_sq / t : 0.0;
      h[k] = t > 0.0 ? I.int_hamiltonian / t : 0.0;
      q[k] = t > 0.0 ? I.int_qmoment / t : 0.0;
      pr[k] = t > 0.0 ? I.int_probe[0] / t : a;
      dev = std::max(dev, std::abs(rec.diagnostics[k].mean - a));
    }
    mean_dev[static_cast<std::size_t>(p)] = dev;
    times_by_path[p] = rec.times;
  });

  for (int p = 1; p < m; ++p)
    if (times_by_path[p] != times_by_path[0])
      throw std::runtime_error("invariant_estimate: record schedules diverged across paths");

  InvariantResult out;
  EnsembleStats& st = out.stats;
  st.n_paths = m;
  st.horizon = horizon;
  st.burn_in = horizon / 4.0;
  st.initial_mean = a;
  st.times = times_by_path[0];
  st.grad_energy = detail::across_paths(grad);
  st.hamiltonian = detail::across_paths(ham);
  st.q_moment = detail::across_paths(qmom);
  st.probe_mean = detail::across_paths(probe);
  for (double d : mean_dev) st.spatial_mean_max_dev = std::max(st.spatial_mean_max_dev, d);

  // derivative energy bound: (1/t) int E (du/dx)^2 <= a^2/(2 kappa0 t) + E(dV/dx)^2/kappa0
  {
    PropertyCheck c;
    c.name = "derivative energy bound";
    const double forcing = gradient_variance(kick_spec) / spec.kappa0;
    double margin = std::numeric_limits<double>::infinity();
    double worst_t = 0.0;
    for (std::size_t k = 0; k < st.times.size(); ++k) {
      const double t = st.times[k];
      if (t < 1.0 - 1e-9) continue;
      const double rhs = a * a / (2.0 * spec.kappa0 * t) + forcing + 3.0 * st.grad_energy.se[k];
      const double gap = rhs - st.grad_energy.mean[k];
      if (gap < margin) {
        margin = gap;
        worst_t = t;
      }
    }
    c.margin = margin;
    c.pass = margin >= 0.0;
    c.detail = "tightest at t = " + std::to_string(worst_t);
    out.checks.push_back(c);
  }
  // exact discrete conservation of the spatial mean
  {
    PropertyCheck c;
    c.name = "mean conservation";
    const double tol = 1e-12 * std::max(1.0, std::abs(a));
    c.margin = tol - st.spatial_mean_max_dev;
    c.pass = c.margin >= 0.0;
    c.detail = "max |mean - a| = " + std::to_string(st.spatial_mean_max_dev);
    out.checks.push_back(c);
  }
  // probe-cell time-averaged mean within 3 SE of a (plus a rounding floor for
  // the noise-free case, where the SE vanishes and the time-integral
  // quadrature still carries ~1 ulp per step)
  {
    PropertyCheck c;
    c.name = "mean identity";
    const double m0 = st.probe_mean.mean.back();
    const double se = st.probe_mean.se.back();
    c.margin = 3.0 * se + 1e-12 * std::max(1.0, std::abs(a)) - std::abs(m0 - a);
    c.pass = c.margin >= 0.0;
    c.detail = "time-averaged probe mean = " + std::to_string(m0) + " (se " +
               std::to_string(se) + ")";
    out.checks.push_back(c);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Moment growth scan over initial means
// ---------------------------------------------------------------------------

struct ScanRow {
  double a = 0.0;
  double ham = 0.0, ham_se = 0.0;
  double qmom = 0.0, qmom_se = 0.0;
  double ratio_ham = 0.0;   // ham / <a>^2
  double ratio_qmom = 0.0;  // qmom / <a>^2
};

struct ScanResult {
  std::vector<ScanRow> rows;
  double fitted_c_ham = 0.0;   // least squares C in  timeavg ~ C <a>^2
  double fitted_c_qmom = 0.0;
  std::vector<PropertyCheck> checks;
};

/// Scans constant initial means and checks that the time-averaged moments
/// grow no faster than <a>^2: the max over the scan of each ratio must stay
/// within a factor 2 of its median.
inline ScanResult moment_growth_scan(const std::vector<double>& a_list, const Grid& grid,
                                     const ModelSpec& spec, const KickSpec& kick_spec,
                                     const SolverConfig& cfg, int n_paths, double horizon,
                                     std::uint64_t seed, int workers = 1) {
  if (a_list.empty()) throw std::invalid_argument("moment_growth_scan: empty scan");
  ScanResult out;
  double swx_h = 0.0, swx_q = 0.0, sww = 0.0;
  std::vector<double> ratios_h, ratios_q;
  for (std::size_t i = 0; i < a_list.size(); ++i) {
    const double a = a_list[i];
    // distinct sub-seed per scan row so rows are independent
    const InvariantResult inv =
        invariant_estimate(a, grid, spec, kick_spec, cfg, n_paths, horizon,
                           rng::mix64(seed + 1000003u * i), workers);
    ScanRow row;
    row.a = a;
    row.ham = inv.stats.hamiltonian.mean.back();
    row.ham_se = inv.stats.hamiltonian.se.back();
    row.qmom = inv.stats.q_moment.mean.back();
    row.qmom_se = inv.stats.q_moment.se.back();
    const double w = 4.0 + a * a;  // <a>^2
    row.ratio_ham = row.ham / w;
    row.ratio_qmom = row.qmom / w;
    ratios_h.push_back(row.ratio_ham);
    ratios_q.push_back(row.ratio_qmom);
    swx_h += row.ham * w;
    swx_q += row.qmom * w;
    sww += w * w;
    out.rows.push_back(row);
  }
  out.fitted_c_ham = swx_h / sww;
  out.fitted_c_qmom = swx_q / sww;

  auto ratio_check = [](const char* name, const std::vector<double>& r) {
    PropertyCheck c;
    c.name = name;
    const double mx = *std::max_element(r.begin(), r.end());
    const double md = stats::median(r);
    c.margin = 2.0 * md - mx;
    c.pass = c.margin >= 0.0;
    c.detail = "max ratio " + std::to_string(mx) + ", median " + std::to_string(md);
    return c;
  };
  out.checks.push_back(ratio_check("moment ratio bounded (Hamiltonian)", ratios_h));
  out.checks.push_back(ratio_check("moment ratio bounded (q-moment)", ratios_q));
  return out;
}

// ---------------------------------------------------------------------------
// Contraction
// ---------------------------------------------------------------------------

struct ContractionResult {
  std::vector<double> times;
  std::vector<double> l1_distance;
  std::vector<double> weighted_distance;  // empty unless a weight was requested
  double fitted_growth_constant = 0.0;    // OLS slope of log weighted distance
  std::vector<PropertyCheck> checks;
};

/// Evolves an unforced pair on a shared step sequence and reports the decay
/// of the distance between them. The plain l1 distance must be non-increasing
/// pathwise (monotone scheme); the weighted distance may grow at most
/// exponentially and its fitted rate is reported.
inline ContractionResult contraction_test(const Field& u0, const Field& v0,
                                          const ModelSpec& spec, const SolverConfig& cfg,
                                          double horizon, double weighted_ell = 0.0) {
  require_same_grid(u0, v0, "contraction_test");
  KickSpec none = make_kick_spec(0.0, 8.0, u0.grid.length, 1);
  DiagnosticsSpec diag;
  diag.store_snapshots = true;
  auto recs = phi_flow_group({u0, v0}, 0.0, horizon, spec, none, cfg, 0, diag);

  ContractionResult out;
  out.times = recs[0].times;
  const std::size_t len = out.times.size();
  out.l1_distance.resize(len);
  const bool weighted = weighted_ell > 0.0;
  if (weighted) out.weighted_distance.resize(len);
  for (std::size_t k = 0; k < len; ++k) {
    const Field d = recs[0].snapshots[k] - recs[1].snapshots[k];
    out.l1_distance[k] = l1_norm(d);
    if (weighted) out.weighted_distance[k] = weighted_l1_zeta(d, weighted_ell);
  }

  PropertyCheck c;
  c.name = "L1 contraction";
  double max_increase = 0.0;
  for (std::size_t k = 1; k < len; ++k)
    max_increase = std::max(max_increase, out.l1_distance[k] - out.l1_distance[k - 1]);
  const double tol = 1e-10 * std::max(out.l1_distance.front(), 1e-30);
  c.margin = tol - max_increase;
  c.pass = c.margin >= 0.0;
  c.detail = "max per-record increase " + std::to_string(max_increase);
  out.checks.push_back(c);

  if (weighted) {
    std::vector<double> ts, logs;
    for (std::size_t k = 0; k < len; ++k) {
      if (out.weighted_distance[k] > 0.0) {
        ts.push_back(out.times[k]);
        logs.push_back(std::log(out.weighted_distance[k]));
      }
    }
    if (ts.size() >= 2) out.fitted_growth_constant = stats::ols(ts, logs).slope;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ordering under shared noise
// ---------------------------------------------------------------------------

enum class SignSummary { always_plus, always_minus, identically_zero, mixed };

inline const char* to_string(SignSummary s) {
  switch (s) {
    case SignSummary::always_plus: return "always_plus";
    case SignSummary::always_minus: return "always_minus";
    case SignSummary::identically_zero: return "identically_zero";
    default: return "mixed";
  }
}

struct OrderingPair {
  int first = 0;   // the pair tracks u[first] - u[second]
  int second = 0;
  std::vector<double> diff_min;  // per record point
  std::vector<double> diff_max;
  SignSummary summary = SignSummary::mixed;
};

struct OrderingReport {
  std::vector<double> times;
  double burn_in = 0.0;
  std::vector<OrderingPair> pairs;
};

/// Evolves all initial states under the identical kick realization and
/// classifies the sign pattern of each difference after burn-in. Ordered
/// constant initials must stay strictly ordered for the whole run.
inline OrderingReport ordering_experiment(const std::vector<Field>& initials,
                                          const ModelSpec& spec, const KickSpec& kick_spec,
                                          const SolverConfig& cfg, double horizon,
                                          std::uint64_t seed, double burn_in = 0.0) {
  if (initials.size() < 2)
    throw std::invalid_argument("ordering_experiment: need at least two initial fields");
  DiagnosticsSpec diag;
  diag.store_snapshots = true;
  auto recs = phi_flow_group(initials, 0.0, horizon, spec, kick_spec, cfg, seed, diag);

  OrderingReport rep;
  rep.times = recs[0].times;
  rep.burn_in = burn_in;
  const std::size_t len = rep.times.size();
  for (std::size_t i = 0; i < initials.size(); ++i) {
    for (std::size_t j = i + 1; j < initials.size(); ++j) {
      OrderingPair pair;
      pair.first = static_cast<int>(j);
      pair.second = static_cast<int>(i);
      pair.diff_min.resize(len);
      pair.diff_max.resize(len);
      bool any_pos = false, any_neg = false, pointwise_mixed = false, all_zero = true;
      bool strictly_pos = true, strictly_neg = true;
      for (std::size_t k = 0; k < len; ++k) {
        const Field d = recs[j].snapshots[k] - recs[i].snapshots[k];
        double lo = d[0], hi = d[0];
        for (double v : d.values) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
        pair.diff_min[k] = lo;
        pair.diff_max[k] = hi;
        if (rep.times[k] < burn_in - 1e-9) continue;
        if (lo < 0.0 && hi > 0.0) pointwise_mixed = true;
        if (hi > 0.0) any_pos = true;
        if (lo < 0.0) any_neg = true;
        if (lo != 0.0 || hi != 0.0) all_zero = false;
        if (!(lo > 0.0)) strictly_pos = false;
        if (!(hi < 0.0)) strictly_neg = false;
      }
      if (all_zero)
        pair.summary = SignSummary::identically_zero;
      else if (pointwise_mixed || (any_pos && any_neg))
        pair.summary = SignSummary::mixed;
      else if (strictly_pos)
        pair.summary = SignSummary::always_plus;
      else if (strictly_neg)
        pair.summary = SignSummary::always_minus;
      else
        pair.summary = SignSummary::mixed;  // touches zero somewhere
      rep.pairs.push_back(std::move(pair));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Time-aggregated laws at probe cells
// ---------------------------------------------------------------------------

struct DistributionResult {
  std::vector<double> bin_edges;                    // shared bin grid, size nbins+1
  std::vector<std::vector<double>> full_mass;       // per probe, per bin
  std::vector<std::vector<double>> first_half_mass;
  std::vector<std::vector<double>> second_half_mass;
  double half_window_distance = 0.0;  // max over probes
  double cross_cell_distance = 0.0;   // max over probe pairs
  int n_samples_per_probe = 0;
};

/// Histograms of u(t, x_probe) aggregated over the post-burn-in window and
/// all paths, sampled every `lag` time units. The distance between the two
/// halves of the window measures stabilization of the time-averaged law; the
/// distance between distinct probe cells measures space stationarity.
inline DistributionResult empirical_distribution(double a, std::vector<int> probe_cells,
                                                 double lag, const Grid& grid,
                                                 const ModelSpec& spec,
                                                 const KickSpec& kick_spec,
                                                 const SolverConfig& cfg, int n_paths,
                                                 double horizon, std::uint64_t seed,
                                                 int workers = 1, double burn_in = -1.0,
                                                 int n_bins = 64) {
  if (probe_cells.size() < 2)
    throw std::invalid_argument("empirical_distribution: need >= 2 probe cells");
  if (lag < cfg.record_every - 1e-12)
    throw std::invalid_argument("empirical_distribution: lag must be >= the record cadence");
  if (burn_in < 0.0) burn_in = horizon / 4.0;

  DiagnosticsSpec diag;
  diag.probe_cells = probe_cells;
  diag.store_snapshots = false;

  const std::size_t np = probe_cells.size();
  // samples[p][probe] -> values in time order
  std::vector<std::vector<std::vector<double>>> samples(static_cast<std::size_t>(n_paths));
  std::vector<std::vector<double>> sample_times(static_cast<std::size_t>(n_paths));

  parallel_paths(workers, n_paths, [&](int p) {
    const Field init(grid, a);
    const TrajectoryRecord rec =
        phi_flow(init, 0.0, horizon, spec, kick_spec, cfg, rng::path_seed(seed, p), diag);
    auto& mine = samples[static_cast<std::size_t>(p)];
    mine.assign(np, {});
    double next_sample = burn_in;
    for (std::size_t k = 0; k < rec.times.size(); ++k) {
      if (rec.times[k] + 1e-9 < next_sample) continue;
      sample_times[static_cast<std::size_t>(p)].push_back(rec.times[k]);
      for (std::size_t q = 0; q < np; ++q)
        mine[q].push_back(rec.diagnostics[k].probe_values[q]);
      next_sample = rec.times[k] + lag;
    }
  });

  // shared bins over all samples
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& path : samples)
    for (const auto& series : path)
      for (double v : series) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!(lo < hi)) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 1e-9 * (hi - lo) + 1e-12;
  lo -= pad;
  hi += pad;

  DistributionResult out;
  out.bin_edges.resize(static_cast<std::size_t>(n_bins) + 1);
  for (int b = 0; b <= n_bins; ++b)
    out.bin_edges[static_cast<std::size_t>(b)] = lo + (hi - lo) * b / n_bins;
  out.full_mass.assign(np, std::vector<double>(static_cast<std::size_t>(n_bins), 0.0));
  out.first_half_mass = out.full_mass;
  out.second_half_mass = out.full_mass;

  const double mid = 0.5 * (burn_in + horizon);
  int count0 = 0;
  for (int p = 0; p < n_paths; ++p) {
    const auto& ts = sample_times[static_cast<std::size_t>(p)];
    for (std::size_t q = 0; q < np; ++q) {
      const auto& series = samples[static_cast<std::size_t>(p)][q];
      for (std::size_t k = 0; k < series.size(); ++k) {
        int b = static_cast<int>((series[k] - lo) / (hi - lo) * n_bins);
        b = std::clamp(b, 0, n_bins - 1);
        out.full_mass[q][static_cast<std::size_t>(b)] += 1.0;
        if (ts[k] < mid)
          out.first_half_mass[q][static_cast<std::size_t>(b)] += 1.0;
        else
          out.second_half_mass[q][static_cast<std::size_t>(b)] += 1.0;
        if (q == 0) ++count0;
      }
    }
  }
  out.n_samples_per_probe = count0;

  for (std::size_t q = 0; q < np; ++q)
    out.half_window_distance =
        std::max(out.half_window_distance,
                 stats::binned_kolmogorov(out.first_half_mass[q], out.second_half_mass[q]));
  for (std::size_t q = 0; q < np; ++q)
    for (std::size_t r = q + 1; r < np; ++r)
      out.cross_cell_distance = std::max(
          out.cross_cell_distance, stats::binned_kolmogorov(out.full_mass[q], out.full_mass[r]));
  return out;
}

}  // namespace stochflux
