#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "bsdef/rng.hpp"
#include "bsdef/sampling.hpp"

namespace bsdef {

// Diagonal Gaussian initial-state distribution with sampler and density.
struct GaussianPrior {
  Vector mean;
  Vector var;  // per-dimension variances

  int dim() const { return static_cast<int>(mean.size()); }

  Vector sample(RngStream& rng) const {
    std::normal_distribution<double> dist;
    Vector x(mean.size());
    for (int i = 0; i < mean.size(); ++i)
      x[i] = mean[i] + std::sqrt(var[i]) * dist(rng);
    return x;
  }

  double density(const Vector& x) const {
    const double two_pi = 6.283185307179586476925;
    double q = 0.0, logdet = 0.0;
    for (int i = 0; i < mean.size(); ++i) {
      const double r = x[i] - mean[i];
      q += r * r / var[i];
      logdet += std::log(two_pi * var[i]);
    }
    return std::exp(-0.5 * (q + logdet));
  }
};

// Jump term of the state dynamics.  The jump map is beta(e) = e * coeff with
// a scalar mark/increment e from either a compound Poisson or a stable law.
struct JumpSpec {
  enum class Kind { None, CompoundPoisson, AlphaStable };

  Kind kind = Kind::None;
  CompoundPoissonSpec poisson;
  AlphaStableSpec stable;
  Vector coeff;

  static JumpSpec none() { return {}; }
  static JumpSpec compound_poisson(CompoundPoissonSpec spec, Vector c) {
    JumpSpec j;
    j.kind = Kind::CompoundPoisson;
    j.poisson = spec;
    j.coeff = std::move(c);
    return j;
  }
  static JumpSpec alpha_stable(AlphaStableSpec spec, Vector c) {
    JumpSpec j;
    j.kind = Kind::AlphaStable;
    j.stable = spec;
    j.coeff = std::move(c);
    return j;
  }

  // Scalar increment e; the vector increment is e * coeff.
  double scalar_increment(double dt, RngStream& rng) const {
    switch (kind) {
      case Kind::None:
        return 0.0;
      case Kind::CompoundPoisson:
        return compound_poisson_scalar(poisson, dt, rng);
      case Kind::AlphaStable:
        return alpha_stable_increment(stable, dt, rng);
    }
    return 0.0;
  }

  Vector increment(int dim, double dt, RngStream& rng) const {
    if (kind == Kind::None) return Vector::Zero(dim);
    return scalar_increment(dt, rng) * coeff;
  }

  // x += sign * e * coeff without temporaries; no-op (and no RNG use) when
  // there is no jump term.
  void add_scaled_increment(Vector& x, double dt, RngStream& rng,
                            double sign) const {
    if (kind == Kind::None) return;
    x.noalias() += (sign * scalar_increment(dt, rng)) * coeff;
  }
};

// State dynamics dS = b(S) dt + sigma dW + jump increments.  The divergence
// of the drift enters the density-prediction scheme and must be supplied
// alongside b.  `in_domain` restricts drift validity for surface-fitted
// models; empty means the whole space.
struct JumpDiffusionModel {
  int dim = 1;
  std::function<Vector(const Vector&)> drift;
  std::function<double(const Vector&)> drift_divergence;
  Matrix sigma;
  JumpSpec jump;
  GaussianPrior prior;
  std::function<bool(const Vector&)> in_domain;  // optional

  bool inside_domain(const Vector& x) const {
    return !in_domain || in_domain(x);
  }
};

// Discrete measurement m = h(S) + R^(1/2) eta, R interpreted as the noise
// covariance.  `residual` computes m - h(x) and may wrap components (used
// for the bearing angle); default is the plain difference.
class ObservationModel {
 public:
  ObservationModel() = default;
  ObservationModel(int obs_dim, std::function<Vector(const Vector&)> h,
                   Matrix R,
                   std::function<Vector(const Vector&, const Vector&)>
                       residual = nullptr)
      : obs_dim_(obs_dim),
        h_(std::move(h)),
        R_(std::move(R)),
        residual_(std::move(residual)) {
    if (R_.rows() != obs_dim_ || R_.cols() != obs_dim_)
      throw std::invalid_argument("ObservationModel: R shape mismatch");
    if (!R_.isApprox(R_.transpose()))
      throw std::invalid_argument("ObservationModel: R must be symmetric");
    if (R_.isZero(0.0)) {
      noise_factor_ = Matrix::Zero(obs_dim_, obs_dim_);
      invertible_ = false;
    } else {
      Eigen::LLT<Matrix> llt(R_);
      if (llt.info() != Eigen::Success)
        throw std::invalid_argument(
            "ObservationModel: R must be positive definite (or zero)");
      noise_factor_ = llt.matrixL();
      R_inv_ = llt.solve(Matrix::Identity(obs_dim_, obs_dim_));
      invertible_ = true;
    }
  }

  int obs_dim() const { return obs_dim_; }
  const Matrix& R() const { return R_; }
  bool noise_invertible() const { return invertible_; }

  Vector observe(const Vector& x) const { return h_(x); }

  Vector residual(const Vector& m, const Vector& x) const {
    if (residual_) return residual_(m, x);
    return m - h_(x);
  }

  // Noisy measurement of state x.
  Vector measure(const Vector& x, RngStream& rng) const {
    Vector eta(obs_dim_);
    std::normal_distribution<double> dist;
    for (int i = 0; i < obs_dim_; ++i) eta[i] = dist(rng);
    return h_(x) + noise_factor_ * eta;
  }

  // Unnormalized Gaussian log-likelihood -1/2 (m-h(x))' R^-1 (m-h(x)).
  double log_likelihood(const Vector& m, const Vector& x) const {
    if (!invertible_)
      throw std::domain_error(
          "ObservationModel: singular R, likelihood undefined");
    const Vector r = residual(m, x);
    return -0.5 * r.dot(R_inv_ * r);
  }

 private:
  int obs_dim_ = 0;
  std::function<Vector(const Vector&)> h_;
  Matrix R_;
  std::function<Vector(const Vector&, const Vector&)> residual_;
  Matrix R_inv_;
  Matrix noise_factor_;
  bool invertible_ = false;
};

inline double log_likelihood(const ObservationModel& obs, const Vector& m,
                             const Vector& x) {
  return obs.log_likelihood(m, x);
}

struct Trajectory {
  std::vector<double> times;
  Matrix states;  // (n_steps + 1) x dim
};

// 1D multi-well benchmark: b(x) = sin(3x/10), sigma = 4, compound Poisson
// jumps with map 10 e, identity observation with noise variance 0.1.
inline std::pair<JumpDiffusionModel, ObservationModel> example1_model(
    double jump_rate = 1.0,
    MarkDistribution marks = MarkDistribution::normal(),
    double prior_var = 0.25, double prior_mean = 0.0, double obs_var = 0.1) {
  JumpDiffusionModel model;
  model.dim = 1;
  model.drift = [](const Vector& x) {
    Vector b(1);
    b[0] = std::sin(0.3 * x[0]);
    return b;
  };
  model.drift_divergence = [](const Vector& x) {
    return 0.3 * std::cos(0.3 * x[0]);
  };
  model.sigma = Matrix::Constant(1, 1, 4.0);
  CompoundPoissonSpec cp;
  cp.rate = jump_rate;
  cp.mark_distribution = marks;
  cp.compensated = true;
  model.jump = JumpSpec::compound_poisson(cp, Vector::Constant(1, 10.0));
  model.prior = {Vector::Constant(1, prior_mean),
                 Vector::Constant(1, prior_var)};

  ObservationModel obs(
      1, [](const Vector& x) { return x; }, Matrix::Constant(1, 1, obs_var));
  return {std::move(model), std::move(obs)};
}

enum class Kinematics { Paper, Standard };

// 4D bearing-range tracking benchmark with alpha-stable jumps.  State is
// (X, Y, Xdot, Ydot); the printed drift matrix couples velocity into itself
// (Kinematics::Paper); Standard uses the near-constant-velocity variant.
inline std::pair<JumpDiffusionModel, ObservationModel> example2_model(
    double alpha, Kinematics kin = Kinematics::Paper, double jump_gamma = 1.0,
    Vector observer = Vector::Zero(2),
    Vector prior_mean = (Vector(4) << 10.0, 10.0, 1.0, 1.0).finished()) {
  Matrix A = Matrix::Zero(4, 4);
  if (kin == Kinematics::Paper) {
    A << 1, 0, 1, 0,
         0, 1, 0, 1,
         0, 0, 1, 0,
         0, 0, 0, 1;
  } else {
    A << 0, 0, 1, 0,
         0, 0, 0, 1,
         0, 0, 0, 0,
         0, 0, 0, 0;
  }
  const double divergence = A.trace();

  JumpDiffusionModel model;
  model.dim = 4;
  model.drift = [A](const Vector& x) { return Vector(A * x); };
  model.drift_divergence = [divergence](const Vector&) { return divergence; };
  Vector sig(4);
  sig << 0.1, 0.1, 0.05, 0.05;
  model.sigma = sig.asDiagonal();
  AlphaStableSpec st;
  st.alpha = alpha;
  st.gamma = jump_gamma;
  st.beta_skew = 0.0;
  st.delta = 0.0;
  st.allow_cauchy = (alpha == 1.0);
  st.validate();
  Vector coeff(4);
  coeff << 2.0, 2.0, 0.2, 0.2;
  model.jump = JumpSpec::alpha_stable(st, coeff);
  Vector pvar(4);
  pvar << 0.25, 0.25, 0.04, 0.04;
  model.prior = {std::move(prior_mean), pvar};

  Matrix R = Matrix::Zero(2, 2);
  R(0, 0) = 0.01;
  R(1, 1) = 0.1;
  auto h = [observer](const Vector& s) {
    const double dx = s[0] - observer[0];
    const double dy = s[1] - observer[1];
    if (dx == 0.0 && dy == 0.0)
      throw std::domain_error("bearing undefined: target at observer");
    Vector y(2);
    y[0] = std::atan2(dy, dx);
    y[1] = std::sqrt(dx * dx + dy * dy);
    return y;
  };
  const double two_pi = 6.283185307179586476925;
  auto residual = [h, two_pi](const Vector& m, const Vector& s) {
    Vector r = m - h(s);
    r[0] = std::remainder(r[0], two_pi);  // wrap bearing into (-pi, pi]
    return r;
  };
  ObservationModel obs(2, h, R, residual);
  return {std::move(model), std::move(obs)};
}

// Euler path of the state dynamics plus measurements m_n = h(S_n) + noise at
// n = 1..n_steps.  Row n of the returned matrix is the measurement at t_n.
inline std::pair<Trajectory, Matrix> simulate_truth(
    const JumpDiffusionModel& model, const ObservationModel& obs,
    const TimeGrid& grid, RngStream& rng) {
  const int d = model.dim;
  const double dt = grid.dt();
  Trajectory traj;
  traj.times.resize(grid.n_steps + 1);
  traj.states.resize(grid.n_steps + 1, d);
  Matrix meas(grid.n_steps, obs.obs_dim());

  Vector x = model.prior.sample(rng);
  traj.times[0] = grid.time(0);
  traj.states.row(0) = x;
  for (int n = 0; n < grid.n_steps; ++n) {
    x = x + model.drift(x) * dt + model.sigma * gaussian_increment(dt, d, rng) +
        model.jump.increment(d, dt, rng);
    traj.times[n + 1] = grid.time(n + 1);
    traj.states.row(n + 1) = x;
    meas.row(n) = obs.measure(x, rng);
  }
  return {std::move(traj), std::move(meas)};
}

}  // namespace bsdef
