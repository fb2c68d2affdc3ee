#pragma once

// Experiment dispatch: builds the configured objects, runs the named
// experiment, serializes a deterministic artifact (results + property
// checks + canonical config + hash + seed), and supports bit-exact replay.
//
// Everything that lands in the artifact is a pure function of (config,
// seed_root); worker count only changes scheduling, never results.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "stochflux/config.hpp"
#include "stochflux/ergodics.hpp"
#include "stochflux/field_io.hpp"
#include "stochflux/grid.hpp"
#include "stochflux/model.hpp"
#include "stochflux/noise.hpp"
#include "stochflux/solver.hpp"
#include "stochflux/stats.hpp"
#include "stochflux/transforms.hpp"

namespace stochflux {

struct RunOutput {
  json artifact;                      // full artifact written to disk
  std::vector<PropertyCheck> checks;  // echoed for console summary
  std::string out_directory;          // where files were written ("" if not written)
  std::vector<Field> snapshot_dump;   // simulate: optional binary snapshot dump
  std::vector<Field> kick_dump;       // simulate: optional kick gradient dump
};

namespace detail {

inline ModelSpec model_from_config(const ExperimentConfig& c) {
  ModelSpec m = builtin_model(c.model_name);
  for (const auto& [k, v] : c.model_overrides) {
    if (k == "kappa0")
      m.kappa0 = v;
    else if (k == "lambda")
      m.lambda_ = v;
    else if (k == "c1")
      m.c1 = v;
    else if (k == "c2")
      m.c2 = v;
    else if (k == "c_h")
      m.c_h = v;
    else if (k == "c_kappa")
      m.c_kappa = v;
    else if (k == "q")
      m.q = v;
    else if (k == "h_argmin")
      m.h_argmin = v;
    else
      throw ConfigError("unknown model constant override '" + k + "'");
  }
  m.check_constants();
  if (c.zero_hamiltonian) m = zero_hamiltonian(m);
  return m;
}

inline SolverConfig solver_from_config(const ExperimentConfig& c) {
  SolverConfig s;
  s.cfl_safety = c.cfl_safety;
  s.max_dt = c.max_dt;
  s.flux_scheme = flux_scheme_from_string(c.flux_scheme);
  s.record_every = c.record_every;
  if (!(s.cfl_safety > 0.0 && s.cfl_safety <= 1.0))
    throw ConfigError("solver.cfl_safety must be in (0,1]");
  if (!(s.max_dt > 0.0)) throw ConfigError("solver.max_dt must be positive");
  return s;
}

inline KickSpec kick_from_config(const ExperimentConfig& c, std::uint64_t seed) {
  return make_kick_spec(c.sigma_target, c.cutoff, c.grid_length, c.n_modes, seed);
}

inline json check_to_json(const PropertyCheck& c) {
  return json{{"name", c.name}, {"pass", c.pass}, {"margin", c.margin}, {"detail", c.detail}};
}

inline json series_to_json(const SeriesWithError& s) {
  return json{{"mean", s.mean}, {"se", s.se}};
}

inline json validation_to_json(const ValidationReport& rep) {
  json rows = json::array();
  for (const ValidationRow& r : rep.rows)
    rows.push_back(json{{"inequality", r.inequality}, {"worst_u", r.worst_u}, {"slack", r.slack}});
  return json{{"rows", rows}, {"all_pass", rep.all_pass}};
}

// --- individual experiments ------------------------------------------------

inline void run_validate(const ExperimentConfig& c, json& results,
                         std::vector<PropertyCheck>& checks) {
  const ModelSpec m = model_from_config(c);
  const ValidationReport rep = validate_assumptions(m, -10.0, 10.0, 4001);
  results["validation"] = validation_to_json(rep);
  for (const ValidationRow& r : rep.rows) {
    PropertyCheck pc;
    pc.name = "assumption: " + r.inequality;
    pc.pass = r.slack >= 0.0;
    pc.margin = r.slack;
    pc.detail = "worst u = " + std::to_string(r.worst_u);
    checks.push_back(pc);
  }
}

inline void run_simulate(const ExperimentConfig& c, int workers, json& results,
                         std::vector<PropertyCheck>& checks, std::vector<Field>& snapshot_dump,
                         std::vector<Field>& kick_dump) {
  (void)workers;
  const ModelSpec m = model_from_config(c);
  const SolverConfig cfg = solver_from_config(c);
  const Grid grid(c.grid_length, c.grid_cells);
  const KickSpec kicks = kick_from_config(c, c.seed_root);

  Field init(grid, c.a);
  if (c.initial_sin_amplitude != 0.0) {
    for (int i = 0; i < grid.cells; ++i)
      init[i] += c.initial_sin_amplitude *
                 std::sin(2.0 * M_PI * grid.x(i) / grid.length);
  }
  DiagnosticsSpec diag;
  diag.probe_cells = c.probe_cells.empty()
                         ? std::vector<int>{grid.cells / 4, (3 * grid.cells) / 4}
                         : c.probe_cells;
  diag.qmoment_center = c.a;
  diag.store_snapshots = c.dump_snapshots;
  const TrajectoryRecord rec =
      phi_flow(init, 0.0, c.horizon, m, kicks, cfg, c.seed_root, diag);
  if (c.dump_snapshots) snapshot_dump = rec.snapshots;
  if (c.dump_kicks) {
    KickSpec ks = kicks;
    ks.seed_root = c.seed_root;
    for (std::int64_t s : rec.kick_indices)
      kick_dump.push_back(sample_kick(ks, grid, s).gradient);
  }

  json rows = json::array();
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    const DiagnosticsRow& d = rec.diagnostics[k];
    rows.push_back(json{{"t", rec.times[k]},
                        {"post_kick", static_cast<bool>(rec.post_kick[k])},
                        {"mean", d.mean},
                        {"l2", d.l2},
                        {"h1_seminorm", d.h1_seminorm},
                        {"sup", d.sup},
                        {"hamiltonian_mean", d.hamiltonian_mean},
                        {"weighted_sup", d.weighted_sup},
                        {"probe_values", d.probe_values}});
  }
  results["diagnostics"] = rows;
  results["kick_indices"] = rec.kick_indices;

  PropertyCheck pc;
  pc.name = "mean conservation";
  double dev = 0.0;
  const double expect = mean(init);
  for (const DiagnosticsRow& d : rec.diagnostics) dev = std::max(dev, std::abs(d.mean - expect));
  pc.margin = 1e-12 * std::max(1.0, std::abs(expect)) - dev;
  pc.pass = pc.margin >= 0.0;
  pc.detail = "max |mean - mean0| = " + std::to_string(dev);
  checks.push_back(pc);
}

inline void run_invariant(const ExperimentConfig& c, int workers, json& results,
                          std::vector<PropertyCheck>& checks) {
  const ModelSpec m = model_from_config(c);
  const SolverConfig cfg = solver_from_config(c);
  const Grid grid(c.grid_length, c.grid_cells);
  const KickSpec kicks = kick_from_config(c, c.seed_root);
  const InvariantResult inv = invariant_estimate(c.a, grid, m, kicks, cfg, c.n_paths,
                                                 c.horizon, c.seed_root, workers, c.probe_cells);
  results["times"] = inv.stats.times;
  results["grad_energy"] = series_to_json(inv.stats.grad_energy);
  results["hamiltonian"] = series_to_json(inv.stats.hamiltonian);
  results["q_moment"] = series_to_json(inv.stats.q_moment);
  results["probe_mean"] = series_to_json(inv.stats.probe_mean);
  results["spatial_mean_max_dev"] = inv.stats.spatial_mean_max_dev;
  results["derivative_bound_rhs"] = gradient_variance(kicks) / m.kappa0;
  for (const PropertyCheck& pc : inv.checks) checks.push_back(pc);
}

inline void run_scan(const ExperimentConfig& c, int workers, json& results,
                     std::vector<PropertyCheck>& checks) {
  const ModelSpec m = model_from_config(c);
  const SolverConfig cfg = solver_from_config(c);
  const Grid grid(c.grid_length, c.grid_cells);
  const KickSpec kicks = kick_from_config(c, c.seed_root);
  const ScanResult scan = moment_growth_scan(c.a_list, grid, m, kicks, cfg, c.n_paths,
                                             c.horizon, c.seed_root, workers);
  json rows = json::array();
  for (const ScanRow& r : scan.rows)
    rows.push_back(json{{"a", r.a},
                        {"hamiltonian", r.ham},
                        {"hamiltonian_se", r.ham_se},
                        {"q_moment", r.qmom},
                        {"q_moment_se", r.qmom_se},
                        {"ratio_hamiltonian", r.ratio_ham},
                        {"ratio_q_moment", r.ratio_qmom}});
  results["rows"] = rows;
  results["fitted_c_hamiltonian"] = scan.fitted_c_ham;
  results["fitted_c_q_moment"] = scan.fitted_c_qmom;
  for (const PropertyCheck& pc : scan.checks) checks.push_back(pc);
}

inline void run_ordering(const ExperimentConfig& c, json& results,
                         std::vector<PropertyCheck>& checks) {
  const ModelSpec m = model_from_config(c);
  const SolverConfig cfg = solver_from_config(c);
  const Grid grid(c.grid_length, c.grid_cells);
  const KickSpec kicks = kick_from_config(c, c.seed_root);
  std::vector<Field> initials;
  for (double a : c.initials) initials.emplace_back(grid, a);
  const double burn = c.burn_in < 0.0 ? 0.0 : c.burn_in;
  const OrderingReport rep =
      ordering_experiment(initials, m, kicks, cfg, c.horizon, c.seed_root, burn);

  json pairs = json::array();
  for (const OrderingPair& p : rep.pairs) {
    pairs.push_back(json{{"first", p.first},
                         {"second", p.second},
                         {"summary", to_string(p.summary)},
                         {"diff_min", p.diff_min},
                         {"diff_max", p.diff_max}});
  }
  results["times"] = rep.times;
  results["pairs"] = pairs;

  // For constant initials the expected sign pattern is known.
  for (const OrderingPair& p : rep.pairs) {
    const double af = c.initials[static_cast<std::size_t>(p.first)];
    const double as = c.initials[static_cast<std::size_t>(p.second)];
    PropertyCheck pc;
    pc.name = "same-noise ordering (" + std::to_string(p.first) + "," +
              std::to_string(p.second) + ")";
    SignSummary expect = SignSummary::identically_zero;
    if (af > as)
      expect = SignSummary::always_plus;
    else if (af < as)
      expect = SignSummary::always_minus;
    pc.pass = p.summary == expect;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      if (rep.times[k] < burn - 1e-9) continue;
      if (af > as)
        worst = std::min(worst, p.diff_min[k]);
      else if (af < as)
        worst = std::min(worst, -p.diff_max[k]);
      else
        worst = std::min(worst, -std::max(std::abs(p.diff_min[k]), std::abs(p.diff_max[k])));
    }
    pc.margin = worst;
    pc.detail = std::string("classified ") + to_string(p.summary);
    checks.push_back(pc);
  }
}

inline void run_contraction(const ExperimentConfig& c, json& results,
                            std::vector<PropertyCheck>& checks) {
  const ModelSpec m = model_from_config(c);
  const SolverConfig cfg = solver_from_config(c);
  const Grid grid(c.grid_length, c.grid_cells);

  double worst_margin = std::numeric_limits<double>::infinity();
  json rows = json::array();
  for (int pair = 0; pair < c.n_pairs; ++pair) {
    const Field u0 = random_smooth_field(grid, 1.0, c.cutoff, c.n_modes, c.seed_root,
                                         static_cast<std::uint32_t>(2 * pair));
    const Field v0 = random_smooth_field(grid, 1.0, c.cutoff, c.n_modes, c.seed_root,
                                         static_cast<std::uint32_t>(2 * pair + 1));
    const ContractionResult res = contraction_test(u0, v0, m, cfg, c.horizon, c.weighted_ell);
    const PropertyCheck& pc = res.checks.front();
    worst_margin = std::min(worst_margin, pc.margin);
    json row{{"pair", pair},
             {"initial_l1", res.l1_distance.front()},
             {"final_l1", res.l1_distance.back()}};
    if (!res.weighted_distance.empty()) {
      row["initial_weighted"] = res.weighted_distance.front();
      row["final_weighted"] = res.weighted_distance.back();
      row["fitted_growth_constant"] = res.fitted_growth_constant;
    }
    rows.push_back(row);
  }
  results["pairs"] = rows;

  PropertyCheck pc;
  pc.name = "L1 contraction";
  pc.margin = worst_margin;
  pc.pass = worst_margin >= 0.0;
  pc.detail = std::to_string(c.n_pairs) + " random pairs, horizon " + std::to_string(c.horizon);
  checks.push_back(pc);
}

inline void run_colehopf(const ExperimentConfig& c, int workers, json& results,
                         std::vector<PropertyCheck>& checks) {
  const ModelSpec m = model_from_config(c);
  const SolverConfig base_cfg = solver_from_config(c);
  const double lambda = c.lambda_;

  // -- gradient consistency and equation residual under grid refinement --
  struct LevelResult {
    double grad_err = 0.0;
    double grad_bound = 0.0;
    double residual = 0.0;
  };
  auto run_level = [&](int cells, double cadence) {
    const Grid grid(c.grid_length, cells);
    const KickSpec kicks = kick_from_config(c, c.seed_root);
    SolverConfig cfg = base_cfg;
    cfg.record_every = cadence;
    DiagnosticsSpec diag;
    diag.store_snapshots = true;
    const Field init(grid, 0.0);  // mean-zero so the potential is single-valued
    const TrajectoryRecord rec = phi_flow(init, 0.0, 1.0, m, kicks, cfg, c.seed_root, diag);
    std::vector<KickSample> used;
    KickSpec ks = kicks;
    ks.seed_root = c.seed_root;
    for (std::int64_t s : rec.kick_indices) used.push_back(sample_kick(ks, grid, s));
    const PotentialTrajectory pot = integrate_hj(rec, m, used);

    LevelResult lr;
    lr.grad_err = potential_gradient_error(pot, rec);
    double rough = 0.0;
    for (const Field& u : rec.snapshots) {
      for (int i = 0; i < u.size(); ++i) {
        const int ip = (i + 1 == u.size()) ? 0 : i + 1;
        const int im = (i == 0) ? u.size() - 1 : i - 1;
        rough = std::max(rough, std::abs(u[ip] - 2.0 * u[i] + u[im]) / (grid.dx * grid.dx));
      }
    }
    lr.grad_bound = grid.dx * grid.dx * rough;

    // Residual on the fixed window t >= 0.2, away from the rough post-kick
    // transient, so refinement levels are comparable.
    std::vector<HopfField> phis;
    std::vector<double> times;
    for (std::size_t j = 0; j < pot.times.size(); ++j) {
      if (pot.times[j] < 0.2 - 1e-9) continue;
      phis.push_back(cole_hopf(pot.h_snapshots[j], lambda));
      times.push_back(pot.times[j]);
    }
    lr.residual = hopf_pde_residual(phis, times, m, c.c2);
    return lr;
  };

  const LevelResult coarse = run_level(c.grid_cells / 2, base_cfg.record_every * 2.0);
  const LevelResult fine = run_level(c.grid_cells, base_cfg.record_every);
  results["gradient_error"] = json{{"coarse", coarse.grad_err},
                                   {"fine", fine.grad_err},
                                   {"coarse_bound", coarse.grad_bound},
                                   {"fine_bound", fine.grad_bound}};
  results["residual_report"] = json::array({json{{"level", "coarse"}, {"max_residual", coarse.residual}},
                                            json{{"level", "fine"}, {"max_residual", fine.residual}}});

  {
    PropertyCheck pc;
    pc.name = "potential gradient consistency";
    pc.margin = std::min(coarse.grad_bound - coarse.grad_err, fine.grad_bound - fine.grad_err);
    pc.pass = pc.margin >= 0.0;
    pc.detail = "errors " + std::to_string(coarse.grad_err) + " -> " + std::to_string(fine.grad_err);
    checks.push_back(pc);
    PropertyCheck pr;
    pr.name = "potential gradient refinement";
    pr.margin = coarse.grad_err / 3.0 - fine.grad_err;
    pr.pass = pr.margin >= 0.0;
    pr.detail = "ratio " + std::to_string(coarse.grad_err / std::max(fine.grad_err, 1e-300));
    checks.push_back(pr);
    PropertyCheck pres;
    pres.name = "transformed-equation residual refinement";
    pres.margin = coarse.residual / 2.0 - fine.residual;
    pres.pass = pres.margin >= 0.0;
    pres.detail = "residuals " + std::to_string(coarse.residual) + " -> " +
                  std::to_string(fine.residual);
    checks.push_back(pres);
  }

  // -- growth of the expected transformed field --
  {
    const Grid grid(c.grid_length, c.grid_cells);
    const KickSpec kicks = kick_from_config(c, c.seed_root);
    const int horizon_t = static_cast<int>(std::lround(c.horizon));
    const int doubled = 2 * horizon_t;
    std::vector<std::vector<double>> paths(static_cast<std::size_t>(c.n_paths));
    parallel_paths(workers, c.n_paths, [&](int p) {
      paths[static_cast<std::size_t>(p)] =
          hopf_growth_path(grid, m, kicks, lambda, c.c2, doubled,
                           rng::path_seed(c.seed_root, p), base_cfg);
    });
    std::vector<double> log_mean(static_cast<std::size_t>(doubled)),
        log_se(static_cast<std::size_t>(doubled));
    std::vector<double> column(static_cast<std::size_t>(c.n_paths));
    for (int t = 0; t < doubled; ++t) {
      for (int p = 0; p < c.n_paths; ++p)
        column[static_cast<std::size_t>(p)] = paths[static_cast<std::size_t>(p)][static_cast<std::size_t>(t)];
      const auto ms = stats::mean_se(column);
      log_mean[static_cast<std::size_t>(t)] = std::log(ms.mean);
      log_se[static_cast<std::size_t>(t)] = ms.se / ms.mean;
    }
    results["log_growth"] = json{{"t_first", 1}, {"log_mean", log_mean}, {"log_se", log_se}};

    // fitted constant on [1, T]; the bound must continue to hold on (T, 2T]
    double fitted_c = 0.0;
    for (int t = 1; t <= horizon_t; ++t)
      fitted_c = std::max(fitted_c, log_mean[static_cast<std::size_t>(t - 1)] / (t + 1.0));
    fitted_c = std::max(fitted_c, 0.0);
    results["fitted_growth_constant"] = fitted_c;
    PropertyCheck pc;
    pc.name = "growth bound";
    double margin = std::numeric_limits<double>::infinity();
    for (int t = horizon_t + 1; t <= doubled; ++t) {
      const double bound = fitted_c * (t + 1.0) + 3.0 * log_se[static_cast<std::size_t>(t - 1)];
      margin = std::min(margin, bound - log_mean[static_cast<std::size_t>(t - 1)]);
    }
    pc.margin = margin;
    pc.pass = margin >= 0.0;
    pc.detail = "fitted constant " + std::to_string(fitted_c) + " over horizon " +
                std::to_string(horizon_t) + ", held to " + std::to_string(doubled);
    checks.push_back(pc);
  }
}

inline void run_supersolution(const ExperimentConfig& c, json& results,
                              std::vector<PropertyCheck>& checks) {
  const ModelSpec m = model_from_config(c);
  const SolverConfig cfg = solver_from_config(c);
  const Grid grid(c.grid_length, c.grid_cells);
  const std::vector<double> t_checks = {0.1, 0.5, 1.0};

  double worst = std::numeric_limits<double>::infinity();
  std::vector<double> worst_at_t(t_checks.size(), std::numeric_limits<double>::infinity());
  std::vector<int> violations_at_t(t_checks.size(), 0);
  for (int trial = 0; trial < c.n_trials; ++trial) {
    const Field g = random_smooth_field(grid, 1.0, c.cutoff, c.n_modes, c.seed_root,
                                        static_cast<std::uint32_t>(trial));
    Field phi0(grid);
    for (int i = 0; i < grid.cells; ++i) phi0[i] = std::exp(g[i]);  // positive, order-one
    for (std::size_t k = 0; k < t_checks.size(); ++k) {
      const double t = t_checks[k];
      const Field phi = evolve_hopf(phi0, t, m, c.lambda_, 0.0, cfg);
      const Field bound = supersolution_bound(phi0, t, m.kappa0);
      double min_gap = std::numeric_limits<double>::infinity();
      double sup = 0.0;
      for (int i = 0; i < grid.cells; ++i) {
        min_gap = std::min(min_gap, bound[i] - phi[i]);
        sup = std::max(sup, phi[i]);
      }
      const double margin = min_gap + 1e-8 * sup;
      worst_at_t[k] = std::min(worst_at_t[k], margin);
      if (margin < 0.0) ++violations_at_t[k];
      worst = std::min(worst, margin);
    }
  }
  json report = json::array();
  for (std::size_t k = 0; k < t_checks.size(); ++k)
    report.push_back(json{{"t", t_checks[k]},
                          {"bound_violations", violations_at_t[k]},
                          {"margin", worst_at_t[k]}});
  results["bound_report"] = report;

  PropertyCheck pc;
  pc.name = "supersolution majorant";
  pc.margin = worst;
  pc.pass = worst >= 0.0;
  pc.detail = std::to_string(c.n_trials) + " random profiles at t in {0.1, 0.5, 1.0}";
  checks.push_back(pc);
}

inline void run_distribution(const ExperimentConfig& c, int workers, json& results,
                             std::vector<PropertyCheck>& checks) {
  const ModelSpec m = model_from_config(c);
  const SolverConfig cfg = solver_from_config(c);
  const Grid grid(c.grid_length, c.grid_cells);
  const KickSpec kicks = kick_from_config(c, c.seed_root);
  std::vector<int> probes = c.probe_cells.empty()
                                ? std::vector<int>{grid.cells / 4, (3 * grid.cells) / 4}
                                : c.probe_cells;
  const DistributionResult dist =
      empirical_distribution(c.a, probes, c.lag, grid, m, kicks, cfg, c.n_paths, c.horizon,
                             c.seed_root, workers, c.burn_in);
  results["bin_edges"] = dist.bin_edges;
  results["full_mass"] = dist.full_mass;
  results["first_half_mass"] = dist.first_half_mass;
  results["second_half_mass"] = dist.second_half_mass;
  results["half_window_distance"] = dist.half_window_distance;
  results["cross_cell_distance"] = dist.cross_cell_distance;
  results["n_samples_per_probe"] = dist.n_samples_per_probe;

  PropertyCheck h;
  h.name = "law stabilization (half window)";
  h.margin = 0.1 - dist.half_window_distance;
  h.pass = h.margin >= 0.0;
  h.detail = "distance " + std::to_string(dist.half_window_distance);
  checks.push_back(h);
  PropertyCheck x;
  x.name = "space stationarity (cross cell)";
  x.margin = 0.1 - dist.cross_cell_distance;
  x.pass = x.margin >= 0.0;
  x.detail = "distance " + std::to_string(dist.cross_cell_distance);
  checks.push_back(x);
}

}  // namespace detail

/// Runs the configured experiment and assembles the artifact. Results are a
/// pure function of (config, seed_root); `workers` affects scheduling only.
inline RunOutput run_experiment(const ExperimentConfig& c, int workers = 1) {
  json results = json::object();
  std::vector<PropertyCheck> checks;

  std::vector<Field> snapshot_dump, kick_dump;
  const std::string kind = c.experiment;
  if (kind == "validate")
    detail::run_validate(c, results, checks);
  else if (kind == "simulate")
    detail::run_simulate(c, workers, results, checks, snapshot_dump, kick_dump);
  else if (kind == "invariant")
    detail::run_invariant(c, workers, results, checks);
  else if (kind == "scan")
    detail::run_scan(c, workers, results, checks);
  else if (kind == "ordering")
    detail::run_ordering(c, results, checks);
  else if (kind == "contraction")
    detail::run_contraction(c, results, checks);
  else if (kind == "colehopf")
    detail::run_colehopf(c, workers, results, checks);
  else if (kind == "supersolution")
    detail::run_supersolution(c, results, checks);
  else if (kind == "distribution")
    detail::run_distribution(c, workers, results, checks);
  else
    throw ConfigError("unknown experiment kind '" + kind + "'");

  RunOutput out;
  json jchecks = json::array();
  for (const PropertyCheck& pc : checks) jchecks.push_back(detail::check_to_json(pc));
  out.artifact = json{{"schema", 1},
                      {"experiment", kind},
                      {"config", canonical_json(c)},
                      {"config_hash", config_hash(c)},
                      {"seed_root", c.seed_root},
                      {"results", results},
                      {"checks", jchecks}};
  out.checks = std::move(checks);
  out.snapshot_dump = std::move(snapshot_dump);
  out.kick_dump = std::move(kick_dump);
  return out;
}

/// Writes artifact.json (and the experiment's CSV side files) under
/// <outdir>/<experiment>-<hash>/ and returns the directory.
inline std::string write_artifact(const ExperimentConfig& c, const RunOutput& out) {
  namespace fs = std::filesystem;
  const std::string dir = c.outdir + "/" + c.experiment + "-" + config_hash(c);
  fs::create_directories(dir);
  {
    std::ofstream f(dir + "/artifact.json");
    f << out.artifact.dump(2) << "\n";
  }
  if (c.experiment == "simulate") {
    std::ofstream f(dir + "/diagnostics.jsonl");
    for (const json& row : out.artifact.at("results").at("diagnostics")) f << row.dump() << "\n";
    if (!out.snapshot_dump.empty()) {
      std::ofstream bin(dir + "/snapshots.bin", std::ios::binary);
      for (const Field& s : out.snapshot_dump) write_field_binary(bin, s);
    }
    if (!out.kick_dump.empty()) {
      std::ofstream bin(dir + "/kicks.bin", std::ios::binary);
      for (const Field& k : out.kick_dump) write_field_binary(bin, k);
    }
  }
  if (c.experiment == "distribution") {
    std::ofstream f(dir + "/histograms.csv");
    f << "probe,window,bin_left,bin_right,mass\n";
    const json& r = out.artifact.at("results");
    const auto& edges = r.at("bin_edges");
    const char* windows[3] = {"full", "first_half", "second_half"};
    const char* keys[3] = {"full_mass", "first_half_mass", "second_half_mass"};
    for (int w = 0; w < 3; ++w) {
      const auto& mass = r.at(keys[w]);
      for (std::size_t q = 0; q < mass.size(); ++q)
        for (std::size_t b = 0; b + 1 < edges.size(); ++b)
          f << q << "," << windows[w] << "," << edges[b].dump() << "," << edges[b + 1].dump()
            << "," << mass[q][b].dump() << "\n";
    }
  }
  return dir;
}

/// Re-runs the experiment recorded in an artifact and compares results and
/// checks byte-for-byte. Returns 0 when identical, 1 when they differ.
/// Throws ConfigError (exit 2) when the artifact is unreadable or its
/// recorded hash does not match its recorded config.
inline int replay_artifact(const std::string& artifact_path, int workers = 1) {
  std::ifstream in(artifact_path);
  if (!in) throw ConfigError("cannot read artifact '" + artifact_path + "'");
  json stored;
  try {
    in >> stored;
  } catch (const std::exception& e) {
    throw ConfigError("bad artifact JSON: " + std::string(e.what()));
  }
  if (!stored.contains("config") || !stored.contains("config_hash") ||
      !stored.contains("results"))
    throw ConfigError("artifact is missing config/config_hash/results");
  ExperimentConfig cfg = deserialize_config(stored.at("config"));
  if (config_hash(cfg) != stored.at("config_hash").get<std::string>())
    throw ConfigError("artifact hash mismatch: config was edited or corrupted");
  const RunOutput fresh = run_experiment(cfg, workers);
  const bool same = fresh.artifact.at("results").dump() == stored.at("results").dump() &&
                    fresh.artifact.at("checks").dump() == stored.at("checks").dump();
  return same ? 0 : 1;
}

}  // namespace stochflux
