#pragma once

// Statistical helpers for the test suites: moments, Kolmogorov-Smirnov
// statistics with asymptotic p-values, and chi-squared goodness of fit.

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

namespace teststat {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / (v.size() - 1);
}

// One-sample KS statistic against cdf; sorts a copy of the sample.
inline double ks_statistic(std::vector<double> sample,
                           const std::function<double(double)>& cdf) {
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max(d, std::abs((i + 1) / n - f));
    d = std::max(d, std::abs(f - i / n));
  }
  return d;
}

inline double ks_statistic_two_sample(std::vector<double> a,
                                      std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    d = std::max(d, std::abs(i / na - j / nb));
  }
  return d;
}

// Asymptotic Kolmogorov tail Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 l^2).
inline double kolmogorov_pvalue(double lambda) {
  if (lambda < 1e-10) return 1.0;
  double p = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = 2.0 * std::exp(-2.0 * k * k * lambda * lambda);
    p += (k % 2 == 1) ? term : -term;
    if (term < 1e-14) break;
  }
  return std::min(std::max(p, 0.0), 1.0);
}

inline double ks_pvalue_one_sample(double d, size_t n) {
  const double rn = std::sqrt(static_cast<double>(n));
  return kolmogorov_pvalue(d * (rn + 0.12 + 0.11 / rn));
}

inline double ks_pvalue_two_sample(double d, size_t n, size_t m) {
  const double ne = static_cast<double>(n) * m / (n + m);
  return kolmogorov_pvalue(d * std::sqrt(ne));
}

// Chi-squared goodness-of-fit p-value for observed counts vs expected
// probabilities (both over the same bins).
inline double chi2_gof_pvalue(const std::vector<long>& observed,
                              const std::vector<double>& expected_prob) {
  if (observed.size() != expected_prob.size())
    throw std::invalid_argument("chi2: bin count mismatch");
  long total = 0;
  for (long c : observed) total += c;
  double stat = 0.0;
  for (size_t i = 0; i < observed.size(); ++i) {
    const double e = expected_prob[i] * total;
    if (e <= 0.0) throw std::invalid_argument("chi2: zero expected bin");
    const double diff = observed[i] - e;
    stat += diff * diff / e;
  }
  const double df = static_cast<double>(observed.size() - 1);
  return boost::math::gamma_q(df / 2.0, stat / 2.0);
}

inline double normal_cdf(double x, double mu = 0.0, double sigma = 1.0) {
  return 0.5 * std::erfc(-(x - mu) / (sigma * std::sqrt(2.0)));
}

}  // namespace teststat
