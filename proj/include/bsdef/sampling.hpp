#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "bsdef/rng.hpp"

namespace bsdef {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// dim independent N(0, dt) draws.
inline Vector gaussian_increment(double dt, int dim, RngStream& rng) {
  if (!(dt > 0.0)) throw std::invalid_argument("gaussian_increment: dt <= 0");
  if (dim < 1) throw std::invalid_argument("gaussian_increment: dim < 1");
  std::normal_distribution<double> dist(0.0, std::sqrt(dt));
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v[i] = dist(rng);
  return v;
}

// Scalar mark distribution of a compound Poisson process.
struct MarkDistribution {
  enum class Kind { Normal, Constant };

  Kind kind = Kind::Normal;
  double a = 0.0;  // Normal: mean, Constant: value
  double b = 1.0;  // Normal: stddev

  static MarkDistribution normal(double mean = 0.0, double stddev = 1.0) {
    return {Kind::Normal, mean, stddev};
  }
  static MarkDistribution constant(double value) {
    return {Kind::Constant, value, 0.0};
  }

  double mean() const { return a; }

  double sample(RngStream& rng) const {
    switch (kind) {
      case Kind::Normal: {
        std::normal_distribution<double> dist(a, b);
        return dist(rng);
      }
      case Kind::Constant:
        return a;
    }
    return a;
  }
};

// Finite-activity jump specification: events arrive at `rate` per unit time,
// each carrying a scalar mark e.  When `compensated` is set the deterministic
// compensator rate*dt*E[e] is subtracted from the summed marks.
struct CompoundPoissonSpec {
  double rate = 1.0;
  MarkDistribution mark_distribution = MarkDistribution::normal();
  bool compensated = true;

  void validate() const {
    if (rate < 0.0)
      throw std::invalid_argument("CompoundPoissonSpec: rate must be >= 0");
  }
};

// Summed (optionally compensated) marks of one compound Poisson step.
inline double compound_poisson_scalar(const CompoundPoissonSpec& spec,
                                      double dt, RngStream& rng) {
  spec.validate();
  if (!(dt > 0.0))
    throw std::invalid_argument("compound_poisson_increment: dt <= 0");
  double mark_sum = 0.0;
  if (spec.rate > 0.0) {
    std::poisson_distribution<long> count(spec.rate * dt);
    const long k = count(rng);
    for (long j = 0; j < k; ++j) mark_sum += spec.mark_distribution.sample(rng);
  }
  if (spec.compensated)
    mark_sum -= spec.rate * dt * spec.mark_distribution.mean();
  return mark_sum;
}

// Jump increment over dt with jump map beta(e) = e * beta_coeff.
inline Vector compound_poisson_increment(const CompoundPoissonSpec& spec,
                                         const Vector& beta_coeff, double dt,
                                         RngStream& rng) {
  return compound_poisson_scalar(spec, dt, rng) * beta_coeff;
}

// Stable law in the parameterization
//   E[exp(itX)] = exp(-gamma^a |t|^a [1 + i b sign(t) tan(pi a/2)
//                     ((gamma |t|)^(1-a) - 1)] + i delta t),   a != 1,
// i.e. the location-zero-centered ("type 0") form.  alpha = 1 is outside the
// stated parameterization and rejected unless allow_cauchy is set, in which
// case the symmetric-Cauchy branch of the sampler is used.
struct AlphaStableSpec {
  double alpha = 1.5;
  double gamma = 1.0;
  double beta_skew = 0.0;
  double delta = 0.0;
  bool allow_cauchy = false;

  void validate() const {
    if (!(alpha > 0.0) || alpha > 2.0)
      throw std::invalid_argument("AlphaStableSpec: alpha must be in (0, 2]");
    if (alpha == 1.0 && !allow_cauchy)
      throw std::invalid_argument(
          "AlphaStableSpec: alpha == 1 is outside the parameterization");
    if (!(gamma > 0.0))
      throw std::invalid_argument("AlphaStableSpec: gamma must be > 0");
    if (beta_skew < -1.0 || beta_skew > 1.0)
      throw std::invalid_argument(
          "AlphaStableSpec: beta_skew must be in [-1, 1]");
  }
};

// Standard stable draw, S(alpha, beta; 1) convention with unit scale and zero
// location, by the Chambers-Mallows-Stuck transform.
inline double sample_standard_stable(double alpha, double beta,
                                     RngStream& rng) {
  const double pi = 3.14159265358979323846;
  const double u = (rng.uniform_oo() - 0.5) * pi;  // U(-pi/2, pi/2)
  const double w = rng.exponential();              // Exp(1)
  if (alpha == 1.0) {
    const double c = pi / 2.0 + beta * u;
    return (2.0 / pi) *
           (c * std::tan(u) -
            beta * std::log((pi / 2.0) * w * std::cos(u) / c));
  }
  const double zeta = -beta * std::tan(pi * alpha / 2.0);
  const double xi = std::atan(-zeta) / alpha;
  const double t = alpha * (u + xi);
  return std::pow(1.0 + zeta * zeta, 1.0 / (2.0 * alpha)) * std::sin(t) /
         std::pow(std::cos(u), 1.0 / alpha) *
         std::pow(std::cos(u - t) / w, (1.0 - alpha) / alpha);
}

// One per-step increment: a draw of the spec's law with scale gamma*dt^(1/a)
// and location delta*dt (self-similar time scaling).
inline double alpha_stable_increment(const AlphaStableSpec& spec, double dt,
                                     RngStream& rng) {
  spec.validate();
  if (!(dt > 0.0))
    throw std::invalid_argument("alpha_stable_increment: dt <= 0");
  const double pi = 3.14159265358979323846;
  const double scale = spec.gamma * std::pow(dt, 1.0 / spec.alpha);
  const double loc = spec.delta * dt;
  const double z = sample_standard_stable(spec.alpha, spec.beta_skew, rng);
  if (spec.alpha == 1.0) {
    // S(1, beta; 1) scaling rule; with beta = 0 this is a plain Cauchy.
    return scale * z + loc +
           spec.beta_skew * (2.0 / pi) * scale * std::log(scale);
  }
  // Shift from the S1 draw into the type-0 location convention.
  return scale * z + loc -
         spec.beta_skew * scale * std::tan(pi * spec.alpha / 2.0);
}

}  // namespace bsdef
