#pragma once

// Reference CDF of the stable law defined by the characteristic function
//
//   E[exp(itX)] = exp(-|t|^a [1 + i b sign(t) tan(pi a/2) (|t|^(1-a) - 1)])
//
// (unit scale, zero location), evaluated by numerical inversion -- Gil-Pelaez
// quadrature near the center plus the power tail series -- entirely
// independent of the sampling path it checks.

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace oracle {

namespace detail {

inline constexpr double kPi = 3.14159265358979323846;

// 16-point Gauss-Legendre nodes/weights on [-1, 1].
inline const double kGlNodes[16] = {
    -0.9894009349916499, -0.9445750230732326, -0.8656312023878318,
    -0.7554044083550030, -0.6178762444026438, -0.4580167776572274,
    -0.2816035507792589, -0.0950125098376374, 0.0950125098376374,
    0.2816035507792589,  0.4580167776572274,  0.6178762444026438,
    0.7554044083550030,  0.8656312023878318,  0.9445750230732326,
    0.9894009349916499};
inline const double kGlWeights[16] = {
    0.0271524594117541, 0.0622535239386479, 0.0951585116824928,
    0.1246289712555339, 0.1495959888165767, 0.1691565193950025,
    0.1826034150449236, 0.1894506104550685, 0.1894506104550685,
    0.1826034150449236, 0.1691565193950025, 0.1495959888165767,
    0.1246289712555339, 0.0951585116824928, 0.0622535239386479,
    0.0271524594117541};

// integral of f over [a, b] by panelwise 16-point Gauss-Legendre
template <typename F>
double gauss_panel(const F& f, double a, double b) {
  const double c = 0.5 * (a + b), h = 0.5 * (b - a);
  double acc = 0.0;
  for (int i = 0; i < 16; ++i) acc += kGlWeights[i] * f(c + h * kGlNodes[i]);
  return acc * h;
}

}  // namespace detail

// Tail probability P(X > x) for the symmetric case (beta = 0), x > 0, from
// the series sum_k (-1)^(k-1) Gamma(a k) sin(k pi a / 2) x^(-a k) / (k! pi).
// Convergent for a < 1; asymptotic with spectrally small first omitted term
// at the switch radius used below for a > 1.
inline double symmetric_tail_series(double alpha, double x) {
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 400; ++k) {
    const double mag = std::exp(std::lgamma(alpha * k) -
                                std::lgamma(k + 1.0) - alpha * k * std::log(x));
    const double term = mag * std::sin(k * detail::kPi * alpha / 2.0) *
                        ((k % 2 == 1) ? 1.0 : -1.0);
    if (mag > prev && alpha > 1.0) break;  // asymptotic: stop at smallest term
    sum += term;
    if (mag < 1e-17) break;
    prev = mag;
  }
  return sum / detail::kPi;
}

// F(x) - 1/2 = (1/pi) Int_0^inf exp(-t^a) sin(t x) / t dt, via the
// substitution t = w^q which removes the integrand's endpoint cusp, with
// panels matched to the oscillation.
inline double symmetric_center_integral(double alpha, double x) {
  if (x == 0.0) return 0.0;
  const double ax = std::abs(x);
  const int q = std::max(1, static_cast<int>(std::ceil(2.0 / alpha)));
  const double t_max = std::pow(39.0, 1.0 / alpha);  // exp(-39) ~ 1e-17
  const double w_max = std::pow(t_max, 1.0 / q);
  auto integrand = [&](double w) {
    const double t = std::pow(w, q);
    return q * std::exp(-std::pow(t, alpha)) * std::sin(t * ax) / w;
  };
  // panel boundaries at phase multiples of pi: w_k = (k pi / x)^(1/q)
  double acc = 0.0;
  double lo = 0.0;
  for (int k = 1;; ++k) {
    double hi = std::pow(k * detail::kPi / ax, 1.0 / q);
    bool last = false;
    if (hi >= w_max) {
      hi = w_max;
      last = true;
    }
    // keep panels from degenerating when the phase step is coarse
    const int sub = (hi - lo > 0.5 * w_max) ? 8 : 1;
    for (int s = 0; s < sub; ++s)
      acc += detail::gauss_panel(integrand, lo + (hi - lo) * s / sub,
                                 lo + (hi - lo) * (s + 1) / sub);
    lo = hi;
    if (last) break;
  }
  return (x > 0 ? acc : -acc) / detail::kPi;
}

// CDF of the symmetric standard law (beta = 0).
class SymmetricStableCdf {
 public:
  explicit SymmetricStableCdf(double alpha, int grid_points = 4096)
      : alpha_(alpha) {
    if (!(alpha > 0.0) || alpha >= 2.0)
      throw std::invalid_argument("oracle: alpha must be in (0, 2)");
    x_switch_ = (alpha < 1.0) ? 1.0 : 8.0;
    grid_.resize(grid_points + 1);
    step_ = 2.0 * x_switch_ / grid_points;
    for (int i = 0; i <= grid_points; ++i) {
      const double x = -x_switch_ + i * step_;
      grid_[i] = 0.5 + symmetric_center_integral(alpha_, x);
    }
  }

  double operator()(double x) const {
    if (x > x_switch_) return 1.0 - symmetric_tail_series(alpha_, x);
    if (x < -x_switch_) return symmetric_tail_series(alpha_, -x);
    const double pos = (x + x_switch_) / step_;
    const int i = std::min(static_cast<int>(pos),
                           static_cast<int>(grid_.size()) - 2);
    const double frac = pos - i;
    return grid_[i] * (1.0 - frac) + grid_[i + 1] * frac;
  }

  // |series - quadrature| at the switch radius; consistency check of the two
  // evaluation routes.
  double switch_mismatch() const {
    const double a = 1.0 - symmetric_tail_series(alpha_, x_switch_);
    const double b = 0.5 + symmetric_center_integral(alpha_, x_switch_);
    return std::abs(a - b);
  }

 private:
  double alpha_;
  double x_switch_;
  double step_;
  std::vector<double> grid_;
};

// General-skew CDF at a point (unit scale, zero location), directly from
// Gil-Pelaez: F(x) = 1/2 - (1/pi) Int_0^inf e^(-t^a) sin(theta(t) - t x)/t dt
// with theta(t) = -b tan(pi a/2) (t - t^a).
inline double skewed_stable_cdf(double alpha, double beta, double x) {
  if (alpha == 1.0) throw std::invalid_argument("oracle: alpha == 1");
  const double tapa = std::tan(detail::kPi * alpha / 2.0);
  const int q = std::max(1, static_cast<int>(std::ceil(2.0 / alpha)));
  const double t_max = std::pow(39.0, 1.0 / alpha);
  const double w_max = std::pow(t_max, 1.0 / q);
  auto integrand = [&](double w) {
    const double t = std::pow(w, q);
    const double theta = -beta * tapa * (t - std::pow(t, alpha));
    return q * std::exp(-std::pow(t, alpha)) * std::sin(theta - t * x) / w;
  };
  const double rate = std::abs(x) + std::abs(beta * tapa) + 1.0;
  double acc = 0.0;
  double lo = 0.0;
  for (int k = 1;; ++k) {
    double hi = std::pow(k * detail::kPi / rate, 1.0 / q);
    bool last = false;
    if (hi >= w_max) {
      hi = w_max;
      last = true;
    }
    const int sub = (hi - lo > 0.5 * w_max) ? 8 : 1;
    for (int s = 0; s < sub; ++s)
      acc += detail::gauss_panel(integrand, lo + (hi - lo) * s / sub,
                                 lo + (hi - lo) * (s + 1) / sub);
    lo = hi;
    if (last) break;
  }
  return 0.5 - acc / detail::kPi;
}

}  // namespace oracle
