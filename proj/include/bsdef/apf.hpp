#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bsdef/filter.hpp"
#include "bsdef/models.hpp"
#include "bsdef/rng.hpp"

namespace bsdef {

struct ApfDegeneracy : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParticleSet {
  Matrix particles;  // K x d
  Vector weights;    // sums to 1

  int size() const { return static_cast<int>(particles.rows()); }

  void check() const {
    if (particles.rows() < 1)
      throw std::invalid_argument("ParticleSet: needs at least 1 particle");
    if (weights.size() != particles.rows())
      throw std::invalid_argument("ParticleSet: weights size mismatch");
    if ((weights.array() < 0.0).any())
      throw std::invalid_argument("ParticleSet: negative weight");
  }
};

inline ParticleSet apf_init(const JumpDiffusionModel& model, int particles,
                            RngStream& rng) {
  if (particles < 1) throw std::invalid_argument("apf_init: K < 1");
  ParticleSet set;
  set.particles.resize(particles, model.dim);
  set.weights = Vector::Constant(particles, 1.0 / particles);
  for (int k = 0; k < particles; ++k)
    set.particles.row(k) = model.prior.sample(rng);
  return set;
}

namespace detail {

// Systematic resampling: one uniform offset, K evenly spaced positions
// against the cumulative weights.
inline void systematic_resample(const Vector& weights, RngStream& rng,
                                std::vector<int>& ancestors) {
  const int k = static_cast<int>(weights.size());
  ancestors.resize(k);
  const double u0 = rng.uniform();
  double cum = weights[0];
  int j = 0;
  for (int i = 0; i < k; ++i) {
    const double u = (i + u0) / k;
    while (u > cum && j + 1 < k) cum += weights[++j];
    ancestors[i] = j;
  }
}

}  // namespace detail

// One auxiliary-particle-filter stage: first-stage weights from the
// likelihood at the drift-propagated mean, systematic ancestor resampling,
// full propagation through the jump-diffusion dynamics, second-stage weight
// correction, normalization.
inline ParticleSet apf_step(const ParticleSet& set,
                            const JumpDiffusionModel& model,
                            const ObservationModel& obs, const Vector& m,
                            double dt, RngStream& rng) {
  set.check();
  if (!(dt > 0.0)) throw std::invalid_argument("apf_step: dt <= 0");
  const int K = set.size();
  const int d = model.dim;

  // first stage: lookahead likelihoods at x + b(x) dt
  Vector look_loglik(K), first_stage(K);
  Matrix lookahead(K, d);
  for (int k = 0; k < K; ++k) {
    const Vector x = set.particles.row(k);
    lookahead.row(k) = x + model.drift(x) * dt;
    look_loglik[k] = obs.log_likelihood(m, lookahead.row(k).transpose());
    first_stage[k] = std::log(set.weights[k]) + look_loglik[k];
  }
  const double mx1 = first_stage.maxCoeff();
  if (!std::isfinite(mx1))
    throw ApfDegeneracy("APF degeneracy: zero total weight");
  first_stage = (first_stage.array() - mx1).exp();
  first_stage /= first_stage.sum();

  std::vector<int> ancestors;
  detail::systematic_resample(first_stage, rng, ancestors);

  // propagate chosen ancestors with full dynamics, then correct weights by
  // the likelihood ratio against the ancestor's lookahead likelihood
  ParticleSet out;
  out.particles.resize(K, d);
  Vector logw(K);
  Vector x(d), w(d);
  std::normal_distribution<double> step_normal(0.0, std::sqrt(dt));
  for (int k = 0; k < K; ++k) {
    const int a = ancestors[k];
    const Vector xa = set.particles.row(a);
    x = xa + model.drift(xa) * dt;
    for (int j = 0; j < d; ++j) w[j] = step_normal(rng);
    x.noalias() += model.sigma * w;
    model.jump.add_scaled_increment(x, dt, rng, 1.0);
    out.particles.row(k) = x;
    logw[k] = obs.log_likelihood(m, x) - look_loglik[a];
  }
  const double mx2 = logw.maxCoeff();
  if (!std::isfinite(mx2))
    throw ApfDegeneracy("APF degeneracy: zero total weight");
  out.weights = (logw.array() - mx2).exp();
  const double total = out.weights.sum();
  if (!(total > 0.0) || !std::isfinite(total))
    throw ApfDegeneracy("APF degeneracy: zero total weight");
  out.weights /= total;
  return out;
}

// Runs apf_step over all measurement rows; estimates are the weighted
// particle means.
inline FilterOutput apf_run(const JumpDiffusionModel& model,
                            const ObservationModel& obs,
                            const Matrix& measurements, const TimeGrid& grid,
                            int particles, std::uint64_t seed) {
  if (static_cast<int>(measurements.rows()) != grid.n_steps)
    throw std::invalid_argument("apf_run: measurement count != n_steps");
  const double dt = grid.dt();
  RngStream base(seed);

  FilterOutput out;
  out.estimates.resize(grid.n_steps, model.dim);
  out.per_step_seconds.resize(grid.n_steps);

  auto init_rng = base.substream(0);
  ParticleSet set = apf_init(model, particles, init_rng);
  for (int n = 0; n < grid.n_steps; ++n) {
    const auto t_start = std::chrono::steady_clock::now();
    auto stage = base.substream(static_cast<std::uint64_t>(n) + 1);
    try {
      set = apf_step(set, model, obs, measurements.row(n).transpose(), dt,
                     stage);
    } catch (const ApfDegeneracy& e) {
      throw ApfDegeneracy("stage " + std::to_string(n) + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("apf_run stage " + std::to_string(n) + ": " +
                               e.what());
    }
    out.estimates.row(n) = set.particles.transpose() * set.weights;
    out.per_step_seconds[n] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
  }
  return out;
}

}  // namespace bsdef
