#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "stochflux/field_io.hpp"
#include "stochflux/grid.hpp"
#include "stochflux/noise.hpp"

using namespace stochflux;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("grid geometry", "[grid]") {
  const Grid g(8.0, 256);
  CHECK(g.dx * g.cells == Catch::Approx(8.0).margin(1e-15));
  // centers symmetric about the origin
  for (int i = 0; i < g.cells; ++i)
    CHECK(g.x(i) + g.x(g.cells - 1 - i) == Catch::Approx(0.0).margin(1e-13));
  CHECK_THROWS_AS(Grid(8.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(Grid(-1.0, 64), std::invalid_argument);
}

TEST_CASE("centered derivative", "[grid]") {
  const Grid g(8.0, 256);
  SECTION("derivative of a constant is zero") {
    const Field f(g, 5.0);
    CHECK(sup_norm(deriv(f)) == 0.0);
    CHECK(sup_norm(deriv(deriv(f))) == 0.0);
  }
  SECTION("sin mode against the closed form") {
    const Field f = sample(g, [](double x) { return std::sin(2.0 * kPi * x / 8.0); });
    const Field df = deriv(f);
    double worst = 0.0;
    for (int i = 0; i < g.cells; ++i)
      worst = std::max(worst, std::abs(df[i] - (2.0 * kPi / 8.0) *
                                                   std::cos(2.0 * kPi * g.x(i) / 8.0)));
    CHECK(worst <= 1e-3);
  }
  SECTION("derivative of any periodic field has zero mean") {
    const Field f = random_smooth_field(Grid(16.0, 512), 1.0, 8.0, 32, 5, 0);
    CHECK(std::abs(mean(deriv(f))) <= 1e-13 * sup_norm(f) / f.grid.dx);
  }
}

TEST_CASE("plain norms", "[grid]") {
  const Grid g(8.0, 256);
  const Field c(g, -3.0);
  CHECK(mean(c) == Catch::Approx(-3.0));
  CHECK(sup_norm(c) == Catch::Approx(3.0));
  const Field s = sample(g, [](double x) { return std::sin(2.0 * kPi * x / 8.0); });
  CHECK(std::abs(mean(s)) < 1e-14);
  // indicator of half the cells at height 1 on L=8 has l1 = 4
  Field ind(g);
  for (int i = 0; i < g.cells / 2; ++i) ind[i] = 1.0;
  CHECK(l1_norm(ind) == Catch::Approx(4.0).margin(1e-12));
}

TEST_CASE("norm homogeneity", "[grid][property]") {
  const Grid g(16.0, 128);
  for (int trial = 0; trial < 20; ++trial) {
    const Field f = random_smooth_field(g, 1.0, 4.0, 16, 99, static_cast<std::uint32_t>(trial));
    const double cpos = 0.37 * (trial + 1);
    Field cf = cpos * f;
    CHECK(l1_norm(cf) == Catch::Approx(cpos * l1_norm(f)).epsilon(1e-12));
    CHECK(l2_norm(cf) == Catch::Approx(cpos * l2_norm(f)).epsilon(1e-12));
    CHECK(sup_norm(cf) == Catch::Approx(cpos * sup_norm(f)).epsilon(1e-12));
    CHECK(weighted_sup_norm(cf, WeightTag::poly(0.5)) ==
          Catch::Approx(cpos * weighted_sup_norm(f, WeightTag::poly(0.5))).epsilon(1e-12));
    CHECK(weighted_l1_zeta(cf, 0.5) ==
          Catch::Approx(cpos * weighted_l1_zeta(f, 0.5)).epsilon(1e-12));
  }
}

TEST_CASE("weighted sup norm", "[grid]") {
  const Grid g(64.0, 512);
  SECTION("constant: attained at the cell nearest the origin") {
    const Field f(g, 2.0);
    const double xstar = 0.5 * g.dx;  // closest center to 0
    const double expect = 2.0 / std::pow(angle_bracket(xstar), 0.3);
    CHECK(weighted_sup_norm(f, WeightTag::poly(0.3)) == Catch::Approx(expect).epsilon(1e-12));
    CHECK(weighted_sup_norm(f, WeightTag::poly(0.3)) <= 2.0 / std::pow(2.0, 0.3));
  }
  SECTION("the weight itself has norm 1") {
    const Field f = sample(g, [](double x) { return std::pow(angle_bracket(x), 0.7); });
    CHECK(weighted_sup_norm(f, WeightTag::poly(0.7)) == Catch::Approx(1.0).margin(1e-12));
  }
  SECTION("f = x with ell = 1/2: attained at the boundary") {
    const Field f = sample(g, [](double x) { return x; });
    // direct scan oracle
    double expect = 0.0;
    int arg = -1;
    for (int i = 0; i < g.cells; ++i) {
      const double v = std::abs(g.x(i)) / std::sqrt(angle_bracket(g.x(i)));
      if (v > expect) {
        expect = v;
        arg = i;
      }
    }
    CHECK(weighted_sup_norm(f, WeightTag::poly(0.5)) == Catch::Approx(expect));
    CHECK((arg == 0 || arg == g.cells - 1));
  }
  SECTION("ell = 0 reduces to the sup norm") {
    const Field f = random_smooth_field(g, 1.0, 4.0, 16, 3, 1);
    CHECK(weighted_sup_norm(f, WeightTag::poly(0.0)) == Catch::Approx(sup_norm(f)));
  }
}

TEST_CASE("weighted l1 with the exponential weight", "[grid]") {
  SECTION("zero field") {
    const Grid g(64.0, 1024);
    CHECK(weighted_l1_zeta(Field(g), 0.5) == 0.0);
  }
  SECTION("zeta(0) = 1") { CHECK(zeta_weight(0.0, 0.37) == Catch::Approx(1.0).margin(1e-15)); }
  SECTION("constant field against a fine quadrature of the weight") {
    const Grid g(64.0, 1024);
    const Field f(g, 1.0);
    // 1e6-panel midpoint quadrature of zeta over [-32, 32]
    const int panels = 1000000;
    const double h = 64.0 / panels;
    double q = 0.0;
    for (int i = 0; i < panels; ++i) q += zeta_weight(-32.0 + (i + 0.5) * h, 0.5);
    q *= h;
    CHECK(weighted_l1_zeta(f, 0.5) == Catch::Approx(q).epsilon(1e-4));
  }
  SECTION("zeta decays strictly in |x|") {
    const Grid g(32.0, 256);
    for (int i = g.cells / 2; i + 1 < g.cells; ++i)
      CHECK(zeta_weight(g.x(i + 1), 0.5) < zeta_weight(g.x(i), 0.5));
  }
}

TEST_CASE("periodization", "[grid]") {
  const Grid g(16.0, 512);
  const double margin = 2.0;
  SECTION("constants are reproduced exactly across the seam") {
    const Field f = periodize([](double) { return 3.5; }, g, margin);
    for (int i = 0; i < g.cells; ++i) CHECK(f[i] == Catch::Approx(3.5).margin(1e-12));
  }
  SECTION("compactly supported data is untouched on its support") {
    auto v = [](double x) { return std::abs(x) < 4.0 ? std::cos(x) : 0.0; };
    const Field f = periodize(v, g, margin);
    for (int i = 0; i < g.cells; ++i)
      if (std::abs(g.x(i)) < 4.0) CHECK(f[i] == Catch::Approx(std::cos(g.x(i))).margin(1e-12));
  }
  SECTION("linear data transitions smoothly to the seam") {
    const Field f = periodize([](double x) { return x; }, g, margin);
    for (int i = 0; i < g.cells; ++i) {
      const double x = g.x(i);
      if (std::abs(x) <= 8.0 - margin) {
        CHECK(f[i] == Catch::Approx(x).margin(1e-12));
      } else {
        // direct evaluation oracle of the two-term cutoff sum
        const double expect = periodization_cutoff(x, 16.0, margin) * x +
                              periodization_cutoff(x - 16.0, 16.0, margin) * (x - 16.0) +
                              periodization_cutoff(x + 16.0, 16.0, margin) * (x + 16.0);
        CHECK(f[i] == Catch::Approx(expect).margin(1e-12));
      }
    }
    // near the seam the value interpolates toward the periodic mean, ending
    // close to 0 at +-L/2
    CHECK(std::abs(f[0]) < std::abs(g.x(0)));
    CHECK(std::abs(f[g.cells - 1]) < std::abs(g.x(g.cells - 1)));
  }
  SECTION("margin bounds") {
    CHECK_THROWS_AS(periodize([](double) { return 0.0; }, g, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(periodize([](double) { return 0.0; }, g, 4.0), std::invalid_argument);
  }
}

TEST_CASE("field arithmetic guards grids", "[grid]") {
  const Grid a(8.0, 64), b(8.0, 128);
  CHECK_THROWS_AS(Field(a) + Field(b), std::invalid_argument);
}

TEST_CASE("binary snapshot records round-trip bit-exactly", "[grid][io]") {
  const Grid g(16.0, 128);
  const Field f = random_smooth_field(g, 1.3, 4.0, 16, 55, 0);
  std::stringstream buf(std::ios::in | std::ios::out | std::ios::binary);
  write_field_binary(buf, f);
  // header is 4 + 8 bytes, payload 8 per cell
  CHECK(buf.str().size() == 12u + 8u * 128u);
  const Field back = read_field_binary(buf);
  REQUIRE(back.grid == f.grid);
  for (int i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);

  std::stringstream csv;
  write_field_csv(csv, f);
  std::string first;
  std::getline(csv, first);
  CHECK(first == "x,value");
}
