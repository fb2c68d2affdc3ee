#pragma once

// Diffusivity/Hamiltonian model families and numerical validation of the
// structural hypotheses they must satisfy:
//
//   kappa0 <= kappa(u) <= 1/kappa0                 (uniform ellipticity)
//   c1 |u|^q - 1/c1 <= H(u) <= lambda kappa0 u^2 + c2
//   |H'(u)| <= C_H (1 + |u|)^(q/2)
//   |kappa'(u)| <= C_kappa (1 + |u|)
//
// Validation samples the inequalities densely on a finite range rather than
// symbolically; the dynamics only ever visits a bounded state range.

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace stochflux {

/// Builtin families get specialized (inlined) solver kernels; anything else
/// goes through the std::function members.
enum class ModelFamily { custom, burgers, tanh_subquadratic };

struct ModelSpec {
  std::string name;
  ModelFamily family = ModelFamily::custom;
  bool hamiltonian_is_zero = false;

  std::function<double(double)> kappa;
  std::function<double(double)> kappa_prime;
  std::function<double(double)> hamiltonian;
  std::function<double(double)> hamiltonian_prime;

  /// Closed form of K(u) = int_0^u kappa(r) dr when available; empty means
  /// the primitive is evaluated by quadrature.
  std::function<double(double)> kappa_primitive_closed;

  double kappa0 = 1.0;   // ellipticity constant, in (0, 1]
  double c_kappa = 1.0;  // |kappa'(u)| <= c_kappa (1 + |u|)
  double lambda_ = 0.5;  // H(u) <= lambda * kappa0 * u^2 + c2
  double c1 = 0.5;
  double c2 = 1.0;
  double c_h = 1.0;      // |H'(u)| <= c_h (1 + |u|)^(q/2)
  double q = 2.0;        // growth exponent, in (1, 2]

  /// Minimizer of H; the Engquist-Osher flux splits H there. Both builtin
  /// families are unimodal with the minimum at the origin.
  double h_argmin = 0.0;

  // Holder exponents of the regularity hypotheses; metadata only, not
  // checked numerically.
  double alpha_kappa = 0.75;
  double beta_kappa = 0.5;
  double alpha_h = 0.5;

  void check_constants() const {
    if (!(kappa0 > 0.0 && kappa0 <= 1.0))
      throw std::invalid_argument("ModelSpec: kappa0 must be in (0,1]");
    if (!(q > 1.0 && q <= 2.0))
      throw std::invalid_argument("ModelSpec: q must be in (1,2]");
    if (!(c1 > 0.0 && c2 > 0.0 && lambda_ > 0.0 && c_h > 0.0 && c_kappa > 0.0))
      throw std::invalid_argument("ModelSpec: constants must be positive");
  }
};

/// Known model families. `burgers` is constant diffusivity with a quadratic
/// Hamiltonian; `tanh_kappa_subquadratic` has a genuinely nonlinear
/// diffusivity and sub-quadratic growth (q = 3/2).
inline ModelSpec builtin_model(const std::string& name) {
  ModelSpec m;
  m.name = name;
  if (name == "burgers") {
    m.family = ModelFamily::burgers;
    m.kappa = [](double) { return 1.0; };
    m.kappa_prime = [](double) { return 0.0; };
    m.hamiltonian = [](double u) { return 0.5 * u * u; };
    m.hamiltonian_prime = [](double u) { return u; };
    m.kappa_primitive_closed = [](double u) { return u; };
    m.kappa0 = 1.0;
    m.c_kappa = 1.0;
    m.lambda_ = 0.5;
    m.c1 = 0.5;
    m.c2 = 1.0;
    m.c_h = 1.0;
    m.q = 2.0;
  } else if (name == "tanh_kappa_subquadratic") {
    m.family = ModelFamily::tanh_subquadratic;
    m.kappa = [](double u) { return 1.0 + 0.5 * std::tanh(u); };
    m.kappa_prime = [](double u) {
      const double c = std::cosh(u);
      return 0.5 / (c * c);
    };
    // H(u) = (1 + u^2)^(3/4) - 1
    m.hamiltonian = [](double u) { return std::pow(1.0 + u * u, 0.75) - 1.0; };
    m.hamiltonian_prime = [](double u) { return 1.5 * u * std::pow(1.0 + u * u, -0.25); };
    // K(u) = u + log(cosh u)/2, written to stay finite for large |u|.
    m.kappa_primitive_closed = [](double u) {
      const double a = std::abs(u);
      const double logcosh = a + std::log1p(std::exp(-2.0 * a)) - 0.6931471805599453094;
      return u + 0.5 * logcosh;
    };
    m.kappa0 = 0.5;
    m.c_kappa = 1.0;
    m.lambda_ = 1.0;
    m.c1 = 0.5;
    m.c2 = 1.0;
    m.c_h = 1.5;
    m.q = 1.5;
  } else {
    throw std::invalid_argument("builtin_model: unknown family '" + name + "'");
  }
  m.check_constants();
  return m;
}

/// Copy of a model with the transport term switched off (pure nonlinear
/// diffusion). Used by closed-form oracle runs; such a model no longer
/// satisfies the lower Hamiltonian growth bound and is not meant to pass
/// validate_assumptions.
inline ModelSpec zero_hamiltonian(ModelSpec m) {
  m.hamiltonian = [](double) { return 0.0; };
  m.hamiltonian_prime = [](double) { return 0.0; };
  m.hamiltonian_is_zero = true;
  m.name += "+H0";
  return m;
}

// ---------------------------------------------------------------------------
// Assumption validation
// ---------------------------------------------------------------------------

struct ValidationRow {
  std::string inequality;
  double worst_u = 0.0;
  double slack = 0.0;  // minimal slack over the sample grid; < 0 means violated
};

struct ValidationReport {
  std::vector<ValidationRow> rows;
  bool all_pass = false;
};

/// Checks every model inequality on a uniform grid of n_samples points in
/// [u_min, u_max] and reports the minimal slack of each. Deterministic:
/// identical inputs give a bit-identical report.
inline ValidationReport validate_assumptions(const ModelSpec& spec, double u_min,
                                             double u_max, int n_samples) {
  if (!(u_min < u_max)) throw std::invalid_argument("validate_assumptions: empty range");
  if (n_samples < 2) throw std::invalid_argument("validate_assumptions: need >= 2 samples");
  spec.check_constants();

  struct Tracker {
    std::string name;
    double slack = std::numeric_limits<double>::infinity();
    double worst_u = 0.0;
    void update(double u, double s) {
      if (s < slack) {
        slack = s;
        worst_u = u;
      }
    }
  };
  Tracker ell_lo{"kappa lower bound (kappa >= kappa0)"};
  Tracker ell_hi{"kappa upper bound (kappa <= 1/kappa0)"};
  Tracker h_lo{"H lower bound (H >= c1|u|^q - 1/c1)"};
  Tracker h_hi{"H upper bound (H <= lambda kappa0 u^2 + c2)"};
  Tracker hp{"H' growth (|H'| <= C_H (1+|u|)^(q/2))"};
  Tracker kp{"kappa' growth (|kappa'| <= C_kappa (1+|u|))"};
  Tracker hfd{"H' consistency (centered difference of H)"};

  const double h_step = 1e-4;
  const double fd_tol = 100.0 * h_step * h_step;
  const double du = (u_max - u_min) / (n_samples - 1);
  for (int i = 0; i < n_samples; ++i) {
    const double u = u_min + i * du;
    const double k = spec.kappa(u);
    const double kd = spec.kappa_prime(u);
    const double h = spec.hamiltonian(u);
    const double hd = spec.hamiltonian_prime(u);
    if (!std::isfinite(k) || !std::isfinite(kd) || !std::isfinite(h) || !std::isfinite(hd))
      throw std::runtime_error("validate_assumptions: non-finite model value at u = " +
                               std::to_string(u));
    ell_lo.update(u, k - spec.kappa0);
    ell_hi.update(u, 1.0 / spec.kappa0 - k);
    h_lo.update(u, h - (spec.c1 * std::pow(std::abs(u), spec.q) - 1.0 / spec.c1));
    h_hi.update(u, spec.lambda_ * spec.kappa0 * u * u + spec.c2 - h);
    hp.update(u, spec.c_h * std::pow(1.0 + std::abs(u), 0.5 * spec.q) - std::abs(hd));
    kp.update(u, spec.c_kappa * (1.0 + std::abs(u)) - std::abs(kd));
    const double fd = (spec.hamiltonian(u + h_step) - spec.hamiltonian(u - h_step)) / (2.0 * h_step);
    hfd.update(u, fd_tol - std::abs(hd - fd));
  }

  ValidationReport rep;
  rep.all_pass = true;
  for (const Tracker* t : {&ell_lo, &ell_hi, &h_lo, &h_hi, &hp, &kp, &hfd}) {
    rep.rows.push_back(ValidationRow{t->name, t->worst_u, t->slack});
    if (!(t->slack >= 0.0)) rep.all_pass = false;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// K(u) = int_0^u kappa
// ---------------------------------------------------------------------------

namespace detail {

/// Composite Simpson with panel doubling and Richardson tail estimate.
inline double simpson_to_tolerance(const std::function<double(double)>& f, double a,
                                   double b, double rel_tol) {
  if (a == b) return 0.0;
  auto composite = [&](int panels) {
    const double h = (b - a) / panels;
    double s = f(a) + f(b);
    for (int i = 1; i < panels; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
    return s * h / 3.0;
  };
  double prev = composite(16);
  for (int panels = 32; panels <= (1 << 22); panels *= 2) {
    const double cur = composite(panels);
    if (std::abs(cur - prev) <= rel_tol * std::abs(cur) + 1e-15)
      return cur + (cur - prev) / 15.0;
    prev = cur;
  }
  return prev;
}

}  // namespace detail

/// K(u) = int_0^u kappa(r) dr: the increasing primitive that turns the
/// diffusion term into a pure second difference. Uses the closed form when
/// the model provides one, adaptive quadrature (relative 1e-10) otherwise.
inline double kappa_primitive(const ModelSpec& spec, double u) {
  if (spec.kappa_primitive_closed) return spec.kappa_primitive_closed(u);
  if (u == 0.0) return 0.0;
  return detail::simpson_to_tolerance(spec.kappa, 0.0, u, 1e-10);
}

}  // namespace stochflux
