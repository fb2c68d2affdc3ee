#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stochflux/model.hpp"
#include "stochflux/noise.hpp"
#include "stochflux/solver.hpp"

using namespace stochflux;

namespace {
constexpr double kPi = 3.14159265358979323846;

double max_abs_diff(const Field& a, const Field& b) {
  double worst = 0.0;
  for (int i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}
}  // namespace

TEST_CASE("constants are fixed points of the unforced step", "[solver]") {
  for (const char* name : {"burgers", "tanh_kappa_subquadratic"}) {
    for (FluxScheme scheme : {FluxScheme::lax_friedrichs_local, FluxScheme::engquist_osher}) {
      const ModelSpec m = builtin_model(name);
      SolverConfig cfg;
      cfg.flux_scheme = scheme;
      const Grid g(16.0, 64);
      const Field u(g, -2.7);
      const auto [next, dt] = step_unforced(u, m, cfg);
      INFO(name);
      CHECK(max_abs_diff(next, u) <= 1e-15);
      CHECK(dt > 0.0);
    }
  }
}

TEST_CASE("the step respects both CFL limits", "[solver]") {
  const ModelSpec m = builtin_model("burgers");
  SolverConfig cfg;
  cfg.max_dt = 1.0;
  const Grid g(16.0, 128);
  const Field u = sample(g, [](double x) { return 3.0 * std::sin(2.0 * kPi * x / 16.0); });
  const auto [next, dt] = step_unforced(u, m, cfg);
  (void)next;
  double amax = 0.0;
  for (int i = 0; i < g.cells; ++i) amax = std::max(amax, std::abs(u[i]));
  CHECK(dt <= cfg.cfl_safety * g.dx * g.dx * m.kappa0 / 2.0 + 1e-18);
  CHECK(dt <= cfg.cfl_safety * g.dx / amax + 1e-18);
}

TEST_CASE("pure diffusion reproduces the closed-form mode decay", "[solver]") {
  const ModelSpec heat = zero_hamiltonian(builtin_model("burgers"));
  SolverConfig cfg;
  const Grid g(8.0, 256);
  const Field u0 = sample(g, [](double x) { return std::sin(2.0 * kPi * x / 8.0); });
  const Field ut = psi(u0, 0.1, heat, cfg);
  const double expect = std::exp(-(2.0 * kPi / 8.0) * (2.0 * kPi / 8.0) * 0.1);
  CHECK(sup_norm(ut) / sup_norm(u0) == Catch::Approx(expect).epsilon(0.01));
}

TEST_CASE("exact discrete conservation over many kicked steps", "[solver]") {
  const ModelSpec m = builtin_model("burgers");
  const Grid g(16.0, 512);
  const KickSpec kicks = make_kick_spec(0.5, 8.0, 16.0, 32, 7);
  SolverConfig cfg;
  Field u0 = apply_kick(Field(g, 0.0), sample_kick(kicks, g, 1000));
  DiagnosticsSpec diag;
  diag.store_snapshots = false;
  // ~1e4 steps at this resolution
  const TrajectoryRecord rec = phi_flow(u0, 0.0, 2.2, m, kicks, cfg, 7, diag);
  const double a = mean(u0);
  for (const DiagnosticsRow& d : rec.diagnostics)
    CHECK(std::abs(d.mean - a) <= 1e-12);
}

TEST_CASE("time map identities", "[solver]") {
  const ModelSpec m = builtin_model("burgers");
  SolverConfig cfg;
  const Grid g(8.0, 64);
  const Field v = sample(g, [](double x) { return std::sin(2.0 * kPi * x / 8.0); });

  SECTION("psi at time zero is the identity") {
    const Field w = psi(v, 0.0, m, cfg);
    CHECK(max_abs_diff(w, v) == 0.0);
  }
  SECTION("constants are preserved") {
    const Field w = psi(Field(g, 4.2), 1.3, m, cfg);
    CHECK(max_abs_diff(w, Field(g, 4.2)) <= 1e-14);
  }
  SECTION("negative time is rejected") {
    CHECK_THROWS_AS(psi(v, -1.0, m, cfg), std::invalid_argument);
  }
  SECTION("semigroup on a shared step grid") {
    const ModelSpec heat = zero_hamiltonian(builtin_model("burgers"));
    const Grid g64(8.0, 64);  // diffusive limit 0.45*dx^2/2 = 0.00352
    SolverConfig fixed;
    fixed.max_dt = 0.002;  // below the CFL limit and dividing 0.2, 0.3, 0.5
    const Field f = sample(g64, [](double x) { return std::sin(2.0 * kPi * x / 8.0); });
    const Field two_leg = psi(psi(f, 0.2, heat, fixed), 0.3, heat, fixed);
    const Field one_leg = psi(f, 0.5, heat, fixed);
    CHECK(max_abs_diff(two_leg, one_leg) <= 1e-12);
  }
}

TEST_CASE("kick application", "[solver]") {
  const Grid g(16.0, 512);
  const KickSpec kicks = make_kick_spec(0.5, 8.0, 16.0, 32, 3);
  const KickSample k = sample_kick(kicks, g, 0);
  const Field u = sample(g, [](double x) { return std::cos(2.0 * kPi * x / 16.0); });

  SECTION("zero kick is the identity") {
    const KickSample z = sample_kick(make_kick_spec(0.0, 8.0, 16.0, 32, 3), g, 0);
    CHECK(max_abs_diff(apply_kick(u, z), u) == 0.0);
  }
  SECTION("the mean is unchanged") {
    CHECK(std::abs(mean(apply_kick(u, k)) - mean(u)) <= 1e-13);
  }
  SECTION("kick then un-kick recovers the state to rounding") {
    Field w = apply_kick(u, k);
    for (int i = 0; i < g.cells; ++i) w[i] -= k.gradient[i];
    CHECK(max_abs_diff(w, u) <= 1e-15);
  }
  SECTION("grid mismatch is an error") {
    CHECK_THROWS_AS(apply_kick(Field(Grid(16.0, 256), 0.0), k), std::invalid_argument);
  }
}

TEST_CASE("flow map composition", "[solver]") {
  const ModelSpec m = builtin_model("burgers");
  const Grid g(16.0, 512);
  const KickSpec kicks = make_kick_spec(0.5, 8.0, 16.0, 32, 11);
  SolverConfig cfg;
  DiagnosticsSpec diag;
  diag.store_snapshots = false;
  const Field v = sample(g, [](double x) { return 0.3 * std::sin(2.0 * kPi * x / 16.0); });

  SECTION("sigma = 0 reduces to the unforced composition") {
    const KickSpec none = make_kick_spec(0.0, 8.0, 16.0, 32, 11);
    SolverConfig fixed;
    fixed.max_dt = 0.0001220703125;  // divides record_every = 0.25; below the CFL limit
    const TrajectoryRecord rec = phi_flow(v, 0.0, 2.0, m, none, fixed, 11, diag);
    const Field direct = psi(psi(v, 1.0, m, fixed), 1.0, m, fixed);
    CHECK(max_abs_diff(rec.final_field, direct) <= 1e-12);
  }
  SECTION("two-leg composition with the same noise is the one-leg flow") {
    const TrajectoryRecord full = phi_flow(v, 0.0, 2.0, m, kicks, cfg, 11, diag);
    const TrajectoryRecord leg1 = phi_flow(v, 0.0, 1.0, m, kicks, cfg, 11, diag);
    const TrajectoryRecord leg2 =
        phi_flow(leg1.final_field, 1.0, 2.0, m, kicks, cfg, 11, diag);
    CHECK(max_abs_diff(full.final_field, leg2.final_field) <= 1e-12);
  }
  SECTION("degenerate horizon returns the input") {
    const TrajectoryRecord rec = phi_flow(v, 1.0, 1.0, m, kicks, cfg, 11, diag);
    CHECK(max_abs_diff(rec.final_field, v) == 0.0);
    CHECK(rec.times.size() == 1);
  }
  SECTION("constant initial data keeps its mean at every record") {
    const TrajectoryRecord rec = phi_flow(Field(g, 1.5), 0.0, 3.0, m, kicks, cfg, 11, diag);
    for (const DiagnosticsRow& d : rec.diagnostics) CHECK(std::abs(d.mean - 1.5) <= 1e-12);
  }
}

TEST_CASE("pairs under shared noise", "[solver]") {
  const ModelSpec m = builtin_model("burgers");
  const Grid g(16.0, 512);
  const KickSpec kicks = make_kick_spec(0.5, 8.0, 16.0, 32, 5);
  SolverConfig cfg;
  DiagnosticsSpec diag;
  diag.store_snapshots = true;

  SECTION("identical initials stay bit-identical") {
    const Field v = sample(g, [](double x) { return std::sin(2.0 * kPi * x / 16.0); });
    auto [a, b] = evolve_pair_same_noise(v, v, 0.0, 2.0, m, kicks, cfg, 5, diag);
    CHECK(max_abs_diff(a.final_field, b.final_field) == 0.0);
  }
  SECTION("ordered constants never cross") {
    auto [a, b] =
        evolve_pair_same_noise(Field(g, 0.0), Field(g, 1.0), 0.0, 4.0, m, kicks, cfg, 5, diag);
    double worst = 1e300;
    for (std::size_t k = 0; k < a.snapshots.size(); ++k)
      for (int i = 0; i < g.cells; ++i)
        worst = std::min(worst, b.snapshots[k][i] - a.snapshots[k][i]);
    CHECK(worst >= 0.0);
    // strictly separated by the end
    double final_gap = 1e300;
    for (int i = 0; i < g.cells; ++i)
      final_gap = std::min(final_gap, b.final_field[i] - a.final_field[i]);
    CHECK(final_gap > 0.0);
  }
  SECTION("swapping the arguments swaps the outputs exactly") {
    const Field u = sample(g, [](double x) { return std::sin(2.0 * kPi * x / 16.0); });
    const Field v = sample(g, [](double x) { return std::cos(4.0 * kPi * x / 16.0); });
    auto [a1, b1] = evolve_pair_same_noise(u, v, 0.0, 1.0, m, kicks, cfg, 5, diag);
    auto [b2, a2] = evolve_pair_same_noise(v, u, 0.0, 1.0, m, kicks, cfg, 5, diag);
    CHECK(max_abs_diff(a1.final_field, a2.final_field) == 0.0);
    CHECK(max_abs_diff(b1.final_field, b2.final_field) == 0.0);
  }
}

TEST_CASE("structural properties of the monotone step", "[solver][property]") {
  const Grid g(16.0, 256);
  const KickSpec init_kicks = make_kick_spec(1.0, 4.0, 16.0, 16, 77);
  SolverConfig llf, eo;
  eo.flux_scheme = FluxScheme::engquist_osher;

  for (const char* name : {"burgers", "tanh_kappa_subquadratic"}) {
    const ModelSpec m = builtin_model(name);
    for (const SolverConfig* cfg : {&llf, &eo}) {
      Field u = sample_kick(init_kicks, g, 0).potential;
      double worst = 0.0;  // largest relative excursion outside [min, max]
      for (int step = 0; step < 60; ++step) {
        const double lo = *std::min_element(u.values.begin(), u.values.end());
        const double hi = *std::max_element(u.values.begin(), u.values.end());
        auto [next, dt] = step_unforced(u, m, *cfg);
        (void)dt;
        const double range = std::max(hi - lo, 1e-30);
        for (int i = 0; i < g.cells; ++i) {
          worst = std::max(worst, (lo - next[i]) / range);
          worst = std::max(worst, (next[i] - hi) / range);
        }
        u = next;
      }
      INFO(name);
      CHECK(worst <= 1e-10);
    }
  }
}

TEST_CASE("discrete L1 contraction and comparison on shared steps", "[solver][property]") {
  const Grid g(16.0, 256);
  const ModelSpec m = builtin_model("burgers");
  const KickSpec none = make_kick_spec(0.0, 8.0, 16.0, 16, 0);
  DiagnosticsSpec diag;
  diag.store_snapshots = true;

  for (FluxScheme scheme : {FluxScheme::lax_friedrichs_local, FluxScheme::engquist_osher}) {
    SolverConfig cfg;
    cfg.flux_scheme = scheme;
    for (int trial = 0; trial < 5; ++trial) {
      const Field u0 =
          random_smooth_field(g, 1.0, 4.0, 16, 1234, static_cast<std::uint32_t>(2 * trial));
      const Field v0 =
          random_smooth_field(g, 1.0, 4.0, 16, 1234, static_cast<std::uint32_t>(2 * trial + 1));
      auto recs = phi_flow_group({u0, v0}, 0.0, 0.5, m, none, cfg, 0, diag);
      double prev = 1e300;
      double worst_inc = -1e300, worst_ord = 1e300;
      for (std::size_t k = 0; k < recs[0].times.size(); ++k) {
        const double d = l1_norm(recs[0].snapshots[k] - recs[1].snapshots[k]);
        if (k > 0) worst_inc = std::max(worst_inc, d - prev);
        prev = d;
      }
      CHECK(worst_inc <= 1e-10 * l1_norm(u0 - v0));

      // comparison: ordered data stays ordered
      Field w0 = u0;
      for (int i = 0; i < g.cells; ++i) w0[i] += 0.5;
      auto ord = phi_flow_group({u0, w0}, 0.0, 0.5, m, none, cfg, 0, diag);
      for (std::size_t k = 0; k < ord[0].times.size(); ++k)
        for (int i = 0; i < g.cells; ++i)
          worst_ord = std::min(worst_ord, ord[1].snapshots[k][i] - ord[0].snapshots[k][i]);
      CHECK(worst_ord >= -1e-13);
    }
  }
}

TEST_CASE("weighted sup norms stay bounded on a unit horizon", "[solver]") {
  const ModelSpec m = builtin_model("tanh_kappa_subquadratic");
  const Grid g(16.0, 512);
  const KickSpec kicks = make_kick_spec(0.5, 8.0, 16.0, 32, 21);
  SolverConfig cfg;
  DiagnosticsSpec diag;
  diag.weighted_ells = {0.25, 0.5, 0.75};
  diag.store_snapshots = false;
  const TrajectoryRecord rec = phi_flow(Field(g, 1.0), 0.0, 1.0, m, kicks, cfg, 21, diag);
  for (std::size_t k = 0; k < rec.times.size(); ++k) {
    for (std::size_t w = 0; w < diag.weighted_ells.size(); ++w) {
      const double ws = rec.diagnostics[k].weighted_sup[w];
      CHECK(std::isfinite(ws));
      // the weight is >= 2^ell, so the weighted norm is below sup/2^ell
      CHECK(ws <= rec.diagnostics[k].sup / std::pow(2.0, diag.weighted_ells[w]) + 1e-12);
    }
  }
}

TEST_CASE("spatial convergence order on the diffusion oracle", "[solver]") {
  const ModelSpec heat = zero_hamiltonian(builtin_model("burgers"));
  SolverConfig cfg;
  auto decay_error = [&](int n) {
    const Grid g(8.0, n);
    const Field u0 = sample(g, [](double x) { return std::sin(2.0 * kPi * x / 8.0); });
    const Field ut = psi(u0, 0.1, heat, cfg);
    const double expect = std::exp(-(2.0 * kPi / 8.0) * (2.0 * kPi / 8.0) * 0.1);
    return std::abs(sup_norm(ut) / sup_norm(u0) - expect);
  };
  const double e128 = decay_error(128);
  const double e256 = decay_error(256);
  const double order = std::log2(e128 / e256);
  CHECK(order >= 1.9);
}

TEST_CASE("trajectory records are well-formed", "[solver]") {
  const ModelSpec m = builtin_model("burgers");
  const Grid g(16.0, 512);
  const KickSpec kicks = make_kick_spec(0.5, 8.0, 16.0, 32, 2);
  SolverConfig cfg;
  DiagnosticsSpec diag;
  diag.store_snapshots = true;
  const TrajectoryRecord rec = phi_flow(Field(g, 0.0), 0.5, 3.25, m, kicks, cfg, 2, diag);
  REQUIRE(rec.times.size() >= 2);
  for (std::size_t k = 1; k < rec.times.size(); ++k) CHECK(rec.times[k] > rec.times[k - 1]);
  CHECK(rec.diagnostics.size() == rec.times.size());
  CHECK(rec.snapshots.size() == rec.times.size());
  CHECK(rec.post_kick.size() == rec.times.size());
  // kicks at the integers inside (0.5, 3.25): 1, 2, 3; none at the start
  CHECK(rec.kick_indices == std::vector<std::int64_t>{1, 2, 3});
  CHECK(rec.post_kick.front() == 0);
  // the record at t = 2 stores the post-kick state
  bool found = false;
  for (std::size_t k = 0; k < rec.times.size(); ++k)
    if (std::abs(rec.times[k] - 2.0) < 1e-12) {
      found = true;
      CHECK(rec.post_kick[k] == 1);
    }
  CHECK(found);
}

TEST_CASE("non-finite states are reported", "[solver]") {
  const ModelSpec m = builtin_model("burgers");
  SolverConfig cfg;
  Field u(Grid(8.0, 64), 0.0);
  u[10] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_WITH(step_unforced(u, m, cfg),
                    Catch::Matchers::ContainsSubstring("non-finite"));
}
