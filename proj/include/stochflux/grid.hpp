#pragma once

// Uniform periodic grid, sampled fields, discrete calculus, and the weighted
// norms used throughout. The grid is centered at the origin so the weights
// <x> = sqrt(4 + x^2) attain their minimum in the middle of the domain.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochflux {

struct Grid {
  double length = 0.0;  // torus circumference L
  int cells = 0;        // number of cells N
  double dx = 0.0;      // L / N

  Grid() = default;
  Grid(double L, int N) : length(L), cells(N), dx(L / N) {
    if (!(L > 0.0)) throw std::invalid_argument("Grid: length must be positive");
    if (N < 8) throw std::invalid_argument("Grid: need at least 8 cells");
  }

  /// Cell centers (i + 1/2) dx - L/2, symmetric about the origin.
  double x(int i) const { return (i + 0.5) * dx - 0.5 * length; }

  bool operator==(const Grid& o) const {
    return length == o.length && cells == o.cells;
  }
  bool operator!=(const Grid& o) const { return !(*this == o); }
};

struct Field {
  Grid grid;
  std::vector<double> values;

  Field() = default;
  explicit Field(const Grid& g, double fill = 0.0)
      : grid(g), values(static_cast<std::size_t>(g.cells), fill) {}
  Field(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (static_cast<int>(values.size()) != g.cells)
      throw std::invalid_argument("Field: value count does not match grid");
  }

  int size() const { return grid.cells; }
  double& operator[](int i) { return values[static_cast<std::size_t>(i)]; }
  double operator[](int i) const { return values[static_cast<std::size_t>(i)]; }
};

inline void require_same_grid(const Field& a, const Field& b, const char* what) {
  if (a.grid != b.grid)
    throw std::invalid_argument(std::string(what) + ": fields live on different grids");
}

/// Samples f(x) at the cell centers.
inline Field sample(const Grid& g, const std::function<double(double)>& f) {
  Field out(g);
  for (int i = 0; i < g.cells; ++i) out[i] = f(g.x(i));
  return out;
}

// ---------------------------------------------------------------------------
// Discrete calculus and plain norms
// ---------------------------------------------------------------------------

/// Centered difference with periodic wraparound, second order.
inline Field deriv(const Field& f) {
  const int n = f.size();
  Field out(f.grid);
  const double inv2dx = 1.0 / (2.0 * f.grid.dx);
  for (int i = 0; i < n; ++i) {
    const int ip = (i + 1 == n) ? 0 : i + 1;
    const int im = (i == 0) ? n - 1 : i - 1;
    out[i] = (f[ip] - f[im]) * inv2dx;
  }
  return out;
}

inline double mean(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s / f.size();
}

inline double l1_norm(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += std::abs(v);
  return f.grid.dx * s;
}

inline double l2_norm(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return std::sqrt(f.grid.dx * s);
}

inline double sup_norm(const Field& f) {
  double s = 0.0;
  for (double v : f.values) s = std::max(s, std::abs(v));
  return s;
}

// ---------------------------------------------------------------------------
// Weighted norms
// ---------------------------------------------------------------------------

/// <x> = sqrt(4 + x^2); the weight p_ell is <x>^ell.
inline double angle_bracket(double x) { return std::sqrt(4.0 + x * x); }

/// zeta(x) = exp(2^(1-ell) - <x>^(1-ell)), normalized so zeta(0) = 1.
inline double zeta_weight(double x, double ell) {
  const double e = 1.0 - ell;
  return std::exp(std::pow(2.0, e) - std::pow(angle_bracket(x), e));
}

struct WeightTag {
  enum class Kind { poly_ell, zeta_ell } kind = Kind::poly_ell;
  double ell = 0.5;

  static WeightTag poly(double ell) {
    if (!(ell >= 0.0 && ell < 1.0))
      throw std::invalid_argument("WeightTag: poly exponent must be in [0,1)");
    return WeightTag{Kind::poly_ell, ell};
  }
  static WeightTag zeta(double ell) {
    if (!(ell > 0.0 && ell < 1.0))
      throw std::invalid_argument("WeightTag: zeta exponent must be in (0,1)");
    return WeightTag{Kind::zeta_ell, ell};
  }
};

/// sup_i |f_i| / <x_i>^ell. ell = 0 reduces to the plain sup norm.
inline double weighted_sup_norm(const Field& f, const WeightTag& tag) {
  if (tag.kind != WeightTag::Kind::poly_ell)
    throw std::invalid_argument("weighted_sup_norm: expected a poly_ell tag");
  double s = 0.0;
  for (int i = 0; i < f.size(); ++i) {
    s = std::max(s, std::abs(f[i]) / std::pow(angle_bracket(f.grid.x(i)), tag.ell));
  }
  return s;
}

/// dx * sum_i |f_i| zeta(x_i), the discrete weighted L1 norm.
inline double weighted_l1_zeta(const Field& f, double ell) {
  if (!(ell > 0.0 && ell < 1.0))
    throw std::invalid_argument("weighted_l1_zeta: ell must be in (0,1)");
  double s = 0.0;
  for (int i = 0; i < f.size(); ++i) s += std::abs(f[i]) * zeta_weight(f.grid.x(i), ell);
  return f.grid.dx * s;
}

// ---------------------------------------------------------------------------
// L-periodization
// ---------------------------------------------------------------------------

/// Quintic smoothstep, C^2, with s(t) + s(1-t) = 1.
inline double smoothstep5(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

/// Cutoff for the L-periodization: 1 on |x| <= L/2 - margin, 0 on
/// |x| >= L/2 + margin, complementary quintic ramp across the seam so that
/// sum_j chi(x - jL) = 1 identically.
inline double periodization_cutoff(double x, double L, double margin) {
  const double t = (0.5 * L + margin - std::abs(x)) / (2.0 * margin);
  return smoothstep5(t);
}

/// v^[L](x) = sum_j chi(x - jL) v(x - jL), sampled on the grid.
inline Field periodize(const std::function<double(double)>& v, const Grid& g, double margin) {
  if (!(margin > 0.0 && margin < g.length / 4.0))
    throw std::invalid_argument("periodize: margin must be in (0, L/4)");
  Field out(g);
  const double L = g.length;
  for (int i = 0; i < g.cells; ++i) {
    const double x = g.x(i);
    double s = 0.0;
    for (int j = -1; j <= 1; ++j) {
      const double y = x - j * L;
      const double chi = periodization_cutoff(y, L, margin);
      if (chi > 0.0) s += chi * v(y);
    }
    out[i] = s;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Field arithmetic helpers
// ---------------------------------------------------------------------------

inline Field& axpy(Field& y, double alpha, const Field& x) {
  require_same_grid(y, x, "axpy");
  for (int i = 0; i < y.size(); ++i) y[i] += alpha * x[i];
  return y;
}

inline Field operator+(const Field& a, const Field& b) {
  require_same_grid(a, b, "operator+");
  Field out = a;
  for (int i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

inline Field operator-(const Field& a, const Field& b) {
  require_same_grid(a, b, "operator-");
  Field out = a;
  for (int i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

inline Field operator*(double c, const Field& a) {
  Field out = a;
  for (double& v : out.values) v *= c;
  return out;
}

}  // namespace stochflux
