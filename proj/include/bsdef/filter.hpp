#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bsdef/cloud.hpp"
#include "bsdef/models.hpp"
#include "bsdef/parallel.hpp"
#include "bsdef/rng.hpp"
#include "bsdef/sampling.hpp"
#include "bsdef/shepard.hpp"

namespace bsdef {

struct FilterDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Estimator { Mean, Mode };

struct FilterConfig {
  int n_points = 200;           // N
  int mc_samples = 20;          // M
  int neighbors = 8;            // J
  int mcmc_iters = 5;           // L
  Vector proposal_scale;        // empty: per-dimension Silverman rule
  double density_floor = 1e-30;
  std::uint64_t seed = 0;
  ShepardMode shepard = ShepardMode::Inverse;
  Estimator estimator = Estimator::Mean;
  NeighborIndex::Method knn = NeighborIndex::Method::Auto;
  int threads = 1;       // per-point parallelism inside one run
  bool keep_clouds = false;

  void validate() const {
    if (n_points < 2)
      throw std::invalid_argument("FilterConfig: n_points must be >= 2");
    if (mc_samples < 1)
      throw std::invalid_argument("FilterConfig: mc_samples must be >= 1");
    if (neighbors < 1)
      throw std::invalid_argument("FilterConfig: neighbors must be >= 1");
    if (mcmc_iters < 0)
      throw std::invalid_argument("FilterConfig: mcmc_iters must be >= 0");
    if (!(density_floor > 0.0))
      throw std::invalid_argument("FilterConfig: density_floor must be > 0");
    if (proposal_scale.size() > 0 && (proposal_scale.array() <= 0.0).any())
      throw std::invalid_argument("FilterConfig: proposal_scale must be > 0");
  }
};

struct FilterRunStats {
  long floored_predictions = 0;
  long out_of_domain_points = 0;
};

struct FilterOutput {
  Matrix estimates;  // n_steps x d, row n is the estimate at t_{n+1}
  std::vector<PointCloud> clouds;
  std::vector<double> per_step_seconds;
  FilterRunStats stats;
};

namespace detail {

// One backward Euler sample x - b(x) dt + sigma w - jump, written in place.
// base_pt must already hold x - b(x) dt.
inline void backward_sample(Vector& out, Vector& w_scratch,
                            const Vector& base_pt,
                            const JumpDiffusionModel& model, double dt,
                            std::normal_distribution<double>& step_normal,
                            RngStream& rng) {
  for (int j = 0; j < model.dim; ++j) w_scratch[j] = step_normal(rng);
  out = base_pt;
  out.noalias() += model.sigma * w_scratch;
  model.jump.add_scaled_increment(out, dt, rng, -1.0);
}

inline Vector silverman_scale(const Matrix& points) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  const Vector mean = points.colwise().mean();
  Vector scale(d);
  const double factor = std::pow(static_cast<double>(n),
                                 -1.0 / (d + 4.0));
  for (int j = 0; j < d; ++j) {
    const double var =
        (points.col(j).array() - mean[j]).square().sum() / (n - 1);
    scale[j] = std::max(std::sqrt(var), 1e-12) * factor;
  }
  return scale;
}

// Exact duplicate rows break neighbor search; nudge all but the first of
// each duplicate group.
inline void perturb_duplicates(Matrix& points, const Vector& noise_scale,
                               RngStream& rng) {
  const int n = static_cast<int>(points.rows());
  const int d = static_cast<int>(points.cols());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  auto row_less = [&](int a, int b) {
    for (int j = 0; j < d; ++j) {
      if (points(a, j) < points(b, j)) return true;
      if (points(a, j) > points(b, j)) return false;
    }
    return a < b;
  };
  auto row_equal = [&](int a, int b) {
    for (int j = 0; j < d; ++j)
      if (points(a, j) != points(b, j)) return false;
    return true;
  };
  for (int pass = 0; pass < 5; ++pass) {
    std::sort(order.begin(), order.end(), row_less);
    bool any = false;
    std::normal_distribution<double> nd;
    for (int k = 1; k < n; ++k) {
      if (!row_equal(order[k - 1], order[k])) continue;
      any = true;
      auto sub = rng.substream(static_cast<std::uint64_t>(pass) * n + k);
      for (int j = 0; j < d; ++j)
        points(order[k], j) += noise_scale[j] * nd(sub);
    }
    if (!any) return;
  }
}

}  // namespace detail

// Draws N points from the prior and stores the prior density at each point.
inline PointCloud init_cloud(const JumpDiffusionModel& model,
                             const FilterConfig& config, RngStream& rng) {
  config.validate();
  const int n = config.n_points;
  PointCloud cloud;
  cloud.points.resize(n, model.dim);
  cloud.values.resize(n);
  cloud.time_index = 0;
  for (int i = 0; i < n; ++i) {
    auto sub = rng.substream(i);
    const Vector x = model.prior.sample(sub);
    const double p = model.prior.density(x);
    if (!std::isfinite(p))
      throw std::runtime_error("init_cloud: prior density not finite");
    cloud.points.row(i) = x;
    cloud.values[i] = std::max(p, config.density_floor);
  }
  auto dedup = rng.substream(static_cast<std::uint64_t>(n) + 1);
  detail::perturb_duplicates(cloud.points,
                             Vector::Constant(model.dim, 1e-12), dedup);
  return cloud;
}

// Forward Euler move of every point with independent noise; density values
// are not transported (the prediction step recomputes them).
inline Matrix propagate_points(const Matrix& points,
                               const JumpDiffusionModel& model, double dt,
                               RngStream& rng, int threads = 1) {
  if (!(dt > 0.0)) throw std::invalid_argument("propagate: dt <= 0");
  const int n = static_cast<int>(points.rows());
  const int d = model.dim;
  Matrix out(n, d);
  parallel_for(n, threads, [&](int i) {
    auto sub = rng.substream(i);
    try {
      Vector x = points.row(i);
      Vector w(d);
      std::normal_distribution<double> step_normal(0.0, std::sqrt(dt));
      for (int j = 0; j < d; ++j) w[j] = step_normal(sub);
      x.noalias() += model.drift(points.row(i).transpose()) * dt;
      x.noalias() += model.sigma * w;
      model.jump.add_scaled_increment(x, dt, sub, 1.0);
      out.row(i) = x;
    } catch (const std::exception& e) {
      throw std::runtime_error("propagate failed at point " +
                               std::to_string(i) + ": " + e.what());
    }
  });
  return out;
}

inline Matrix propagate_cloud(const PointCloud& cloud,
                              const JumpDiffusionModel& model, double dt,
                              RngStream& rng, int threads = 1) {
  return propagate_points(cloud.points, model, dt, rng, threads);
}

// M independent backward Euler samples anchored at x, rows of the result.
inline Matrix backward_euler_samples(const Vector& x,
                                     const JumpDiffusionModel& model,
                                     double dt, int M, RngStream& rng) {
  if (!(dt > 0.0))
    throw std::invalid_argument("backward_euler_samples: dt <= 0");
  if (M < 1) throw std::invalid_argument("backward_euler_samples: M < 1");
  const int d = model.dim;
  Vector base_pt = x - model.drift(x) * dt;
  Matrix samples(M, d);
  Vector s(d), w(d);
  std::normal_distribution<double> step_normal(0.0, std::sqrt(dt));
  for (int m = 0; m < M; ++m) {
    detail::backward_sample(s, w, base_pt, model, dt, step_normal, rng);
    samples.row(m) = s;
  }
  return samples;
}

// Density prediction over one step: for each new point, Monte Carlo average
// of the interpolated previous density over backward samples, with the
// drift-divergence correction E[P] - E[div b * P] dt.
inline Vector prediction_step(const PointCloud& prev, const Matrix& new_points,
                              const JumpDiffusionModel& model, double dt,
                              const FilterConfig& config, RngStream& rng,
                              FilterRunStats* stats = nullptr) {
  config.validate();
  if (!(dt > 0.0)) throw std::invalid_argument("prediction_step: dt <= 0");
  prev.check();
  const int n = static_cast<int>(new_points.rows());
  const int d = model.dim;
  const int M = config.mc_samples;
  const int J = std::min(config.neighbors, prev.size());
  const ShepardInterpolant phat(prev.points, prev.values, J, config.shepard,
                                config.knn);
  Vector values(n);
  std::vector<long> floored(n, 0), outside_all(n, 0);
  parallel_for(n, config.threads, [&](int i) {
    auto sub = rng.substream(i);
    const Vector anchor = new_points.row(i);
    const Vector base_pt = anchor - model.drift(anchor) * dt;
    Vector s(d), w(d);
    std::normal_distribution<double> step_normal(0.0, std::sqrt(dt));
    double sum_p = 0.0, sum_div_p = 0.0;
    int outside = 0;
    for (int m = 0; m < M; ++m) {
      detail::backward_sample(s, w, base_pt, model, dt, step_normal, sub);
      if (!model.inside_domain(s)) ++outside;
      const double p = phat.eval(s.data());
      sum_p += p;
      sum_div_p += model.drift_divergence(s) * p;
    }
    double v;
    if (model.in_domain && outside == M) {
      v = config.density_floor;
      outside_all[i] = 1;
    } else {
      v = sum_p / M - (sum_div_p / M) * dt;
    }
    if (v < config.density_floor) {
      v = config.density_floor;
      floored[i] = 1;
    }
    values[i] = v;
  });
  if (stats) {
    for (int i = 0; i < n; ++i) {
      stats->floored_predictions += floored[i];
      stats->out_of_domain_points += outside_all[i];
    }
  }
  return values;
}

// Bayes update in log space; the result is self-normalized over the cloud
// (values sum to 1), floored and renormalized.
inline Vector bayes_update(const Vector& pred_values, const Matrix& points,
                           const Vector& m, const ObservationModel& obs,
                           double density_floor = 1e-30) {
  const int n = static_cast<int>(pred_values.size());
  Vector logpost(n);
  for (int i = 0; i < n; ++i)
    logpost[i] =
        std::log(pred_values[i]) + obs.log_likelihood(m, points.row(i));
  const double mx = logpost.maxCoeff();
  if (!std::isfinite(mx))
    throw FilterDivergence(
        "filter divergence: likelihood support disjoint from cloud");
  Vector v = (logpost.array() - mx).exp();
  v /= v.sum();
  v = v.cwiseMax(density_floor);
  v /= v.sum();
  return v;
}

// Per-point Metropolis-Hastings chains with the interpolated posterior as
// stationary density; returns the relocated point set.
inline Matrix mh_resample(const PointCloud& cloud, const FilterConfig& config,
                          RngStream& rng, long* accepted = nullptr,
                          long* proposed = nullptr) {
  config.validate();
  cloud.check();
  const int n = cloud.size();
  const int d = cloud.dim();
  const int J = std::min(config.neighbors, n);
  const Vector scale = config.proposal_scale.size() > 0
                           ? config.proposal_scale
                           : detail::silverman_scale(cloud.points);
  if (scale.size() != d)
    throw std::invalid_argument("mh_resample: proposal_scale dimension");
  Matrix out = cloud.points;
  if (config.mcmc_iters == 0) return out;
  const ShepardInterpolant phat(cloud.points, cloud.values, J, config.shepard,
                                config.knn);
  std::vector<long> acc(n, 0);
  parallel_for(n, config.threads, [&](int i) {
    auto sub = rng.substream(i);
    Vector x = cloud.points.row(i);
    Vector prop(d);
    double px = phat.eval(x.data());
    std::normal_distribution<double> nd;
    for (int l = 0; l < config.mcmc_iters; ++l) {
      for (int j = 0; j < d; ++j) prop[j] = x[j] + scale[j] * nd(sub);
      const double pp = phat.eval(prop.data());
      if (sub.uniform() < pp / px) {
        x = prop;
        px = pp;
        ++acc[i];
      }
    }
    out.row(i) = x;
  });
  if (accepted) {
    *accepted = 0;
    for (int i = 0; i < n; ++i) *accepted += acc[i];
  }
  if (proposed) *proposed = static_cast<long>(n) * config.mcmc_iters;
  auto dedup = rng.substream(static_cast<std::uint64_t>(n) + 1);
  detail::perturb_duplicates(out, Vector(1e-8 * scale), dedup);
  return out;
}

// Posterior point estimate: value-weighted mean, or the highest-value point.
inline Vector estimate_state(const PointCloud& cloud,
                             Estimator estimator = Estimator::Mean) {
  const double total = cloud.values.sum();
  if (!(total > 0.0))
    throw std::invalid_argument("estimate_state: values sum must be > 0");
  if (estimator == Estimator::Mode) {
    int imax = 0;
    cloud.values.maxCoeff(&imax);
    return cloud.points.row(imax);
  }
  return Vector(cloud.points.transpose() * cloud.values / total);
}

// Full recursion: propagate -> predict -> Bayes update -> estimate -> MCMC
// resample, one stage per measurement row.  The first stage propagates the
// prior cloud directly (no resampling before any data has arrived).
inline FilterOutput filter_run(const JumpDiffusionModel& model,
                               const ObservationModel& obs,
                               const Matrix& measurements, const TimeGrid& grid,
                               const FilterConfig& config) {
  config.validate();
  if (static_cast<int>(measurements.rows()) != grid.n_steps)
    throw std::invalid_argument("filter_run: measurement count != n_steps");
  const double dt = grid.dt();
  RngStream base(config.seed);

  FilterOutput out;
  out.estimates.resize(grid.n_steps, model.dim);
  out.per_step_seconds.resize(grid.n_steps);

  auto init_rng = base.substream(0);
  PointCloud cloud = init_cloud(model, config, init_rng);
  Matrix prop_src = cloud.points;  // D_0, later the resampled D_{n+1/2}

  for (int n = 0; n < grid.n_steps; ++n) {
    const auto t_start = std::chrono::steady_clock::now();
    auto stage = base.substream(static_cast<std::uint64_t>(n) + 1);
    try {
      auto rng_prop = stage.substream(0);
      const Matrix new_points =
          propagate_points(prop_src, model, dt, rng_prop, config.threads);
      auto rng_pred = stage.substream(1);
      const Vector pred = prediction_step(cloud, new_points, model, dt, config,
                                          rng_pred, &out.stats);
      const Vector post = bayes_update(pred, new_points,
                                       measurements.row(n).transpose(), obs,
                                       config.density_floor);
      cloud = PointCloud{new_points, post, n + 1};
      out.estimates.row(n) = estimate_state(cloud, config.estimator);
      auto rng_mh = stage.substream(2);
      prop_src = mh_resample(cloud, config, rng_mh);
    } catch (const FilterDivergence& e) {
      throw FilterDivergence("stage " + std::to_string(n) + ": " + e.what());
    } catch (const std::exception& e) {
      throw std::runtime_error("filter_run stage " + std::to_string(n) + ": " +
                               e.what());
    }
    out.per_step_seconds[n] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                      t_start)
            .count();
    if (config.keep_clouds) out.clouds.push_back(cloud);
  }
  return out;
}

}  // namespace bsdef
