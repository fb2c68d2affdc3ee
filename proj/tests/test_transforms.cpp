#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "stochflux/noise.hpp"
#include "stochflux/solver.hpp"
#include "stochflux/transforms.hpp"

using namespace stochflux;

namespace {
constexpr double kPi = 3.14159265358979323846;

std::vector<KickSample> kicks_for(const TrajectoryRecord& rec, const KickSpec& spec,
                                  std::uint64_t seed) {
  KickSpec ks = spec;
  ks.seed_root = seed;
  std::vector<KickSample> out;
  for (std::int64_t s : rec.kick_indices) out.push_back(sample_kick(ks, rec.grid, s));
  return out;
}
}  // namespace

TEST_CASE("potential of the zero solution vanishes", "[transforms]") {
  const ModelSpec m = builtin_model("burgers");
  const Grid g(16.0, 256);
  const KickSpec none = make_kick_spec(0.0, 8.0, 16.0, 16, 1);
  SolverConfig cfg;
  DiagnosticsSpec diag;
  diag.store_snapshots = true;
  const TrajectoryRecord rec = phi_flow(Field(g, 0.0), 0.0, 2.0, m, none, cfg, 1, diag);
  const PotentialTrajectory pot = integrate_hj(rec, m, kicks_for(rec, none, 1));
  CHECK(pot.slope == 0.0);
  for (const Field& h : pot.h_snapshots) CHECK(sup_norm(h) <= 1e-12);
}

TEST_CASE("potential of a constant solution", "[transforms]") {
  const ModelSpec m = builtin_model("burgers");
  const Grid g(16.0, 256);
  const KickSpec none = make_kick_spec(0.0, 8.0, 16.0, 16, 1);
  SolverConfig cfg;
  DiagnosticsSpec diag;
  diag.store_snapshots = true;
  const double c = 1.4;
  const TrajectoryRecord rec = phi_flow(Field(g, c), 0.0, 2.0, m, none, cfg, 1, diag);
  const PotentialTrajectory pot = integrate_hj(rec, m, kicks_for(rec, none, 1));
  CHECK(pot.slope == Catch::Approx(c).margin(1e-13));
  // the gradient identity holds exactly for constants
  CHECK(potential_gradient_error(pot, rec) <= 1e-12);
  // the periodic part drifts at rate -H(c): h(t) - h(0) = -H(c) t, uniform in x
  for (std::size_t j = 0; j < pot.times.size(); ++j) {
    const double expect = -m.hamiltonian(c) * (pot.times[j] - pot.times[0]);
    for (int i = 0; i < g.cells; ++i)
      CHECK(pot.h_snapshots[j][i] - pot.h_snapshots[0][i] == Catch::Approx(expect).margin(1e-9));
  }
}

TEST_CASE("gradient identity for a kicked run, with refinement", "[transforms]") {
  const ModelSpec m = builtin_model("burgers");
  const KickSpec kicks = make_kick_spec(0.5, 8.0, 16.0, 32, 9);
  SolverConfig cfg;
  cfg.record_every = 0.1;
  DiagnosticsSpec diag;
  diag.store_snapshots = true;

  auto run = [&](int cells) {
    const Grid g(16.0, cells);
    const TrajectoryRecord rec = phi_flow(Field(g, 0.0), 0.0, 1.0, m, kicks, cfg, 9, diag);
    const PotentialTrajectory pot = integrate_hj(rec, m, kicks_for(rec, kicks, 9));
    return std::pair<double, double>{potential_gradient_error(pot, rec), g.dx};
  };
  const auto [err_coarse, dx_coarse] = run(256);
  const auto [err_fine, dx_fine] = run(512);
  (void)dx_fine;
  CHECK(err_coarse > 0.0);
  CHECK(err_fine <= err_coarse / 3.0);  // second-order reconstruction
  CHECK(err_coarse <= 5.0 * dx_coarse * dx_coarse * 100.0);  // generous roughness cap
}

TEST_CASE("mismatched kick lists are rejected", "[transforms]") {
  const ModelSpec m = builtin_model("burgers");
  const Grid g(16.0, 256);
  const KickSpec kicks = make_kick_spec(0.5, 8.0, 16.0, 16, 2);
  SolverConfig cfg;
  DiagnosticsSpec diag;
  diag.store_snapshots = true;
  const TrajectoryRecord rec = phi_flow(Field(g, 0.0), 0.0, 2.0, m, kicks, cfg, 2, diag);
  std::vector<KickSample> wrong = kicks_for(rec, kicks, 2);
  wrong.pop_back();
  CHECK_THROWS_AS(integrate_hj(rec, m, wrong), std::invalid_argument);
  CHECK_THROWS_AS(integrate_hj(TrajectoryRecord{}, m, wrong), std::invalid_argument);
}

TEST_CASE("exponential transform basics", "[transforms]") {
  const Grid g(8.0, 64);
  SECTION("zero potential maps to one") {
    const HopfField f = cole_hopf(Field(g, 0.0), 0.5);
    for (int i = 0; i < g.cells; ++i) CHECK(f.phi[i] == 1.0);
  }
  SECTION("constant potential") {
    const HopfField f = cole_hopf(Field(g, 1.0), 0.5);
    for (int i = 0; i < g.cells; ++i)
      CHECK(f.phi[i] == Catch::Approx(std::exp(-0.5)).epsilon(1e-14));
  }
  SECTION("round trip") {
    const Field h = sample(g, [](double x) { return std::sin(2.0 * kPi * x / 8.0); });
    const Field back = inverse_cole_hopf(cole_hopf(h, 0.7));
    for (int i = 0; i < g.cells; ++i) CHECK(back[i] == Catch::Approx(h[i]).margin(1e-12));
  }
  SECTION("jump factorization") {
    const Field h = sample(g, [](double x) { return 0.3 * std::cos(2.0 * kPi * x / 8.0); });
    const Field v = sample(g, [](double x) { return 0.2 * std::sin(4.0 * kPi * x / 8.0); });
    const double lambda = 0.5;
    const HopfField joint = cole_hopf(h + v, lambda);
    const HopfField hf = cole_hopf(h, lambda);
    const HopfField vf = cole_hopf(v, lambda);
    for (int i = 0; i < g.cells; ++i)
      CHECK(joint.phi[i] == Catch::Approx(hf.phi[i] * vf.phi[i]).epsilon(1e-13));
  }
  SECTION("range errors") {
    CHECK_THROWS_AS(cole_hopf(Field(g, 0.0), -1.0), std::invalid_argument);
    CHECK_THROWS_WITH(cole_hopf(Field(g, -1500.0), 1.0),
                      Catch::Matchers::ContainsSubstring("rescale"));
    HopfField bad{Field(g, 0.0), 1.0};
    CHECK_THROWS_AS(inverse_cole_hopf(bad), std::runtime_error);
  }
}

TEST_CASE("equation residual on closed-form data", "[transforms]") {
  const ModelSpec m = builtin_model("burgers");
  SECTION("a time-constant field has zero residual when c2 = 0") {
    const Grid g(8.0, 64);
    std::vector<HopfField> phis;
    std::vector<double> times;
    for (int j = 0; j < 5; ++j) {
      phis.push_back(cole_hopf(Field(g, 2.0), 0.5));
      times.push_back(0.3 + 0.01 * j);
    }
    CHECK(hopf_pde_residual(phis, times, m, 0.0) <= 1e-10);
  }
  SECTION("single decaying mode of the constant-coefficient equation") {
    const Grid g(2.0 * kPi, 256);
    const double eps = 0.5, cadence = 0.01;
    std::vector<HopfField> phis;
    std::vector<double> times;
    for (int j = 0; j < 21; ++j) {
      const double t = 0.3 + cadence * j;
      Field f(g);
      for (int i = 0; i < g.cells; ++i) f[i] = 1.0 + eps * std::exp(-t) * std::cos(g.x(i));
      phis.push_back(HopfField{f, 0.5});
      times.push_back(t);
    }
    CHECK(hopf_pde_residual(phis, times, m, 0.0) <= 1e-3);
  }
  SECTION("nonuniform cadence is rejected") {
    const Grid g(8.0, 64);
    std::vector<HopfField> phis(3, cole_hopf(Field(g, 0.0), 1.0));
    CHECK_THROWS_AS(hopf_pde_residual(phis, {0.1, 0.2, 0.4}, m, 0.0), std::invalid_argument);
  }
}

TEST_CASE("supersolution majorant", "[transforms]") {
  const Grid g(16.0, 512);
  SECTION("the normalizing constant matches a direct minimization") {
    // kappa0 = 1: psi(1, x) = exp(-x^2/4); scan [-1/2, 1/2]
    double b_scan = 1e300;
    for (int i = 0; i <= 100000; ++i) {
      const double x = -0.5 + i * 1e-5;
      b_scan = std::min(b_scan, std::exp(-0.25 * x * x));
    }
    CHECK(b_scan == Catch::Approx(std::exp(-1.0 / 16.0)).margin(1e-9));
    CHECK(b_scan == Catch::Approx(0.93941).margin(1e-5));
    // the majorant of the unit-spike profile reproduces 1/B at the cell center
    Field spike(g, 0.0);
    // cells covering [0, 1): center 0.5 is at index...
    for (int i = 0; i < g.cells; ++i)
      if (g.x(i) >= 0.0 && g.x(i) < 1.0) spike[i] = 1.0;
    const Field bound = supersolution_bound(spike, 1.0, 1.0);
    double at_center = 0.0;
    for (int i = 0; i < g.cells; ++i)
      if (std::abs(g.x(i) - 0.5) < g.dx) at_center = std::max(at_center, bound[i]);
    // (1/B) * psi(2, d) with d up to half a cell off the interval center
    const double off = std::exp(-0.25 * (0.5 * g.dx) * (0.5 * g.dx) / 2.0);
    CHECK(at_center >= std::pow(2.0, -0.5) / b_scan * off - 1e-9);
  }
  SECTION("zero data gives a zero majorant") {
    const Field bound = supersolution_bound(Field(g, 0.0), 0.5, 0.7);
    CHECK(sup_norm(bound) == 0.0);
  }
  SECTION("domination of the evolved field") {
    SolverConfig cfg;
    for (const char* name : {"burgers", "tanh_kappa_subquadratic"}) {
      const ModelSpec m = builtin_model(name);
      for (int trial = 0; trial < 3; ++trial) {
        const Field gfield =
            random_smooth_field(g, 1.0, 8.0, 32, 31, static_cast<std::uint32_t>(trial));
        Field phi0(g);
        for (int i = 0; i < g.cells; ++i) phi0[i] = std::exp(gfield[i]);
        for (double t : {0.1, 0.5, 1.0}) {
          const Field phi = evolve_hopf(phi0, t, m, 0.5, 0.0, cfg);
          const Field bound = supersolution_bound(phi0, t, m.kappa0);
          double gap = 1e300, sup = 0.0;
          for (int i = 0; i < g.cells; ++i) {
            gap = std::min(gap, bound[i] - phi[i]);
            sup = std::max(sup, phi[i]);
          }
          INFO(name << " trial " << trial << " t " << t);
          CHECK(gap >= -1e-8 * sup);
        }
      }
    }
  }
  SECTION("error paths") {
    Field neg(g, 0.0);
    neg[3] = -1.0;
    CHECK_THROWS_AS(supersolution_bound(neg, 0.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(supersolution_bound(Field(g, 1.0), 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(supersolution_bound(Field(g, 1.0), 1.5, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(supersolution_bound(Field(Grid(15.5, 512), 1.0), 0.5, 1.0),
                    std::invalid_argument);
  }
}

TEST_CASE("linear evolution of the transformed field", "[transforms]") {
  SolverConfig cfg;
  SECTION("mode decay at unit coefficient") {
    const ModelSpec m = builtin_model("burgers");
    const Grid g(8.0, 256);
    Field phi0(g);
    for (int i = 0; i < g.cells; ++i)
      phi0[i] = 1.0 + 0.5 * std::cos(2.0 * kPi * g.x(i) / 8.0);
    const Field phi = evolve_hopf(phi0, 0.1, m, 0.5, 0.0, cfg);
    const double amp0 = 0.5;
    double amp = 0.0;
    for (int i = 0; i < g.cells; ++i) amp = std::max(amp, std::abs(phi[i] - 1.0));
    const double expect = amp0 * std::exp(-(2.0 * kPi / 8.0) * (2.0 * kPi / 8.0) * 0.1);
    CHECK(amp == Catch::Approx(expect).epsilon(0.01));
  }
  SECTION("zeroth-order growth term") {
    const ModelSpec m = builtin_model("burgers");
    const Grid g(8.0, 64);
    const Field phi = evolve_hopf(Field(g, 1.0), 1.0, m, 0.5, 1.0, cfg);
    for (int i = 0; i < g.cells; ++i)
      CHECK(phi[i] == Catch::Approx(std::exp(0.5)).epsilon(1e-3));
  }
  SECTION("kicked growth path with zero noise is the deterministic factor") {
    const ModelSpec m = builtin_model("burgers");
    const Grid g(16.0, 256);
    const KickSpec none = make_kick_spec(0.0, 8.0, 16.0, 16, 4);
    const auto means = hopf_growth_path(g, m, none, 0.5, 1.0, 3, 4, cfg);
    REQUIRE(means.size() == 3);
    for (int t = 1; t <= 3; ++t)
      CHECK(means[static_cast<std::size_t>(t - 1)] ==
            Catch::Approx(std::exp(0.5 * t)).epsilon(2e-3));
  }
}
