#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "gffil/parallel.hpp"

namespace gffil {

struct MeanStderr {
  double mean = 0.0;
  double stderr_ = 0.0;
  std::size_t n = 0;
};

inline MeanStderr mean_stderr(const std::vector<double>& x) {
  MeanStderr r;
  r.n = x.size();
  if (r.n == 0) return r;
  r.mean = pairwise_sum(x) / static_cast<double>(r.n);
  if (r.n < 2) return r;
  std::vector<double> sq(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - r.mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(r.n - 1);
  r.stderr_ = std::sqrt(var / static_cast<double>(r.n));
  return r;
}

inline MeanStderr binomial_freq(std::size_t hits, std::size_t n) {
  MeanStderr r;
  r.n = n;
  if (n == 0) return r;
  const double p = static_cast<double>(hits) / static_cast<double>(n);
  r.mean = p;
  r.stderr_ = std::sqrt(std::max(p * (1.0 - p), 1.0 / static_cast<double>(n)) /
                        static_cast<double>(n));
  return r;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x,
                             const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("least_squares: need >= 2 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit f;
  const double den = n * sxx - sx * sx;
  f.slope = (n * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / n;
  return f;
}

// log-log regression of y against x; returns the exponent estimate.
inline LineFit loglog_fit(const std::vector<double>& x,
                          const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return least_squares(lx, ly);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }
inline double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

// Two-sample Kolmogorov-Smirnov statistic.
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    const double fa = static_cast<double>(i) / na;
    const double fb = static_cast<double>(j) / nb;
    d = std::max(d, std::fabs(fa - fb));
  }
  return d;
}

// Critical value of the two-sample KS statistic at significance alpha.
inline double ks_critical(std::size_t na, std::size_t nb, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  return c * std::sqrt((static_cast<double>(na) + static_cast<double>(nb)) /
                       (static_cast<double>(na) * static_cast<double>(nb)));
}

}  // namespace gffil
