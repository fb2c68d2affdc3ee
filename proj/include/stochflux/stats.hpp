#pragma once

// Small deterministic statistics helpers. Reductions over ensemble members
// are pairwise over the member index, so merged totals do not depend on the
// order in which workers finish.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace stochflux::stats {

/// Pairwise (tree) summation of v[lo, hi); deterministic for a fixed index
/// order regardless of how the values were produced.
inline double pairwise_sum(const std::vector<double>& v, std::size_t lo, std::size_t hi) {
  const std::size_t n = hi - lo;
  if (n == 0) return 0.0;
  if (n <= 4) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += v[i];
    return s;
  }
  const std::size_t mid = lo + n / 2;
  return pairwise_sum(v, lo, mid) + pairwise_sum(v, mid, hi);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v, 0, v.size()); }

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
};

/// Sample mean and its standard error (sd / sqrt(n)).
inline MeanSe mean_se(const std::vector<double>& v) {
  const std::size_t n = v.size();
  if (n == 0) throw std::invalid_argument("mean_se: empty sample");
  MeanSe out;
  out.mean = pairwise_sum(v) / static_cast<double>(n);
  if (n > 1) {
    std::vector<double> dev(n);
    for (std::size_t i = 0; i < n; ++i) {
      const double d = v[i] - out.mean;
      dev[i] = d * d;
    }
    const double var = pairwise_sum(dev) / static_cast<double>(n - 1);
    out.se = std::sqrt(var / static_cast<double>(n));
  }
  return out;
}

struct LineFit {
  double intercept = 0.0;
  double slope = 0.0;
};

/// Ordinary least squares y ~ intercept + slope * x.
inline LineFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("ols: bad sample");
  const std::size_t n = x.size();
  double xm = 0.0, ym = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xm += x[i];
    ym += y[i];
  }
  xm /= n;
  ym /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - xm) * (x[i] - xm);
    sxy += (x[i] - xm) * (y[i] - ym);
  }
  if (sxx == 0.0) throw std::invalid_argument("ols: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  return f;
}

/// Median of a sample (average of the middle pair for even sizes).
inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty sample");
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

/// Kolmogorov distance between two binned distributions given as per-bin
/// masses over a shared bin grid (each normalized to total mass 1 first).
inline double binned_kolmogorov(const std::vector<double>& m1, const std::vector<double>& m2) {
  if (m1.size() != m2.size()) throw std::invalid_argument("binned_kolmogorov: bin mismatch");
  const double t1 = pairwise_sum(m1);
  const double t2 = pairwise_sum(m2);
  if (t1 <= 0.0 || t2 <= 0.0) throw std::invalid_argument("binned_kolmogorov: empty histogram");
  double c1 = 0.0, c2 = 0.0, d = 0.0;
  for (std::size_t i = 0; i < m1.size(); ++i) {
    c1 += m1[i] / t1;
    c2 += m2[i] / t2;
    d = std::max(d, std::abs(c1 - c2));
  }
  return d;
}

}  // namespace stochflux::stats
