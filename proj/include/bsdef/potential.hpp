#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "bsdef/models.hpp"

namespace bsdef {

struct Rect {
  double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;

  void validate() const {
    if (!(xmax > xmin) || !(ymax > ymin))
      throw std::invalid_argument("Rect: degenerate domain");
  }
  bool contains(double x, double y) const {
    return x >= xmin && x <= xmax && y >= ymin && y <= ymax;
  }
  double clamp_x(double x) const { return std::min(std::max(x, xmin), xmax); }
  double clamp_y(double y) const { return std::min(std::max(y, ymin), ymax); }
};

// Tensor-product Chebyshev surface c_ij T_i(u) T_j(v) on a rectangle,
// fitted by least squares; exposes value, gradient and Laplacian.
class ChebyshevSurface2D {
 public:
  ChebyshevSurface2D() = default;

  static ChebyshevSurface2D fit(const Eigen::MatrixXd& samples, Rect domain,
                                int degree) {
    domain.validate();
    if (degree < 1) throw std::invalid_argument("surface fit: degree < 1");
    const int n = static_cast<int>(samples.rows());
    const int p = (degree + 1) * (degree + 1);
    if (n < p)
      throw std::invalid_argument("surface fit: fewer samples than basis");
    ChebyshevSurface2D s;
    s.domain_ = domain;
    s.degree_ = degree;
    Eigen::MatrixXd design(n, p);
    std::vector<double> tx(degree + 1), ty(degree + 1);
    for (int k = 0; k < n; ++k) {
      cheb_values(s.to_u(samples(k, 0)), degree, tx.data());
      cheb_values(s.to_v(samples(k, 1)), degree, ty.data());
      int col = 0;
      for (int i = 0; i <= degree; ++i)
        for (int j = 0; j <= degree; ++j) design(k, col++) = tx[i] * ty[j];
    }
    const Eigen::VectorXd c =
        design.colPivHouseholderQr().solve(samples.col(2));
    s.coeff_.resize(degree + 1, degree + 1);
    int col = 0;
    for (int i = 0; i <= degree; ++i)
      for (int j = 0; j <= degree; ++j) s.coeff_(i, j) = c[col++];
    return s;
  }

  const Rect& domain() const { return domain_; }
  int degree() const { return degree_; }

  double value(double x, double y) const {
    thread_local std::vector<double> tx, ty;
    tx.resize(degree_ + 1);
    ty.resize(degree_ + 1);
    cheb_values(to_u(x), degree_, tx.data());
    cheb_values(to_v(y), degree_, ty.data());
    return form(tx.data(), ty.data());
  }

  Eigen::Vector2d gradient(double x, double y) const {
    thread_local std::vector<double> tx, ty, dtx, dty;
    tx.resize(degree_ + 1);
    ty.resize(degree_ + 1);
    dtx.resize(degree_ + 1);
    dty.resize(degree_ + 1);
    cheb_values_d1(to_u(x), degree_, tx.data(), dtx.data());
    cheb_values_d1(to_v(y), degree_, ty.data(), dty.data());
    Eigen::Vector2d g;
    g[0] = form(dtx.data(), ty.data()) * du_dx();
    g[1] = form(tx.data(), dty.data()) * dv_dy();
    return g;
  }

  double laplacian(double x, double y) const {
    thread_local std::vector<double> tx, ty, dtx, dty, d2tx, d2ty;
    tx.resize(degree_ + 1);
    ty.resize(degree_ + 1);
    dtx.resize(degree_ + 1);
    dty.resize(degree_ + 1);
    d2tx.resize(degree_ + 1);
    d2ty.resize(degree_ + 1);
    cheb_values_d2(to_u(x), degree_, tx.data(), dtx.data(), d2tx.data());
    cheb_values_d2(to_v(y), degree_, ty.data(), dty.data(), d2ty.data());
    const double sx = du_dx(), sy = dv_dy();
    return form(d2tx.data(), ty.data()) * sx * sx +
           form(tx.data(), d2ty.data()) * sy * sy;
  }

  // d/dxy value mixed partial; polynomials make it symmetric by construction.
  double mixed_partial(double x, double y) const {
    thread_local std::vector<double> tx, ty, dtx, dty;
    tx.resize(degree_ + 1);
    ty.resize(degree_ + 1);
    dtx.resize(degree_ + 1);
    dty.resize(degree_ + 1);
    cheb_values_d1(to_u(x), degree_, tx.data(), dtx.data());
    cheb_values_d1(to_v(y), degree_, ty.data(), dty.data());
    return form(dtx.data(), dty.data()) * du_dx() * dv_dy();
  }

  void negate() { coeff_ = -coeff_; }

 private:
  double to_u(double x) const {
    return (2.0 * x - domain_.xmin - domain_.xmax) /
           (domain_.xmax - domain_.xmin);
  }
  double to_v(double y) const {
    return (2.0 * y - domain_.ymin - domain_.ymax) /
           (domain_.ymax - domain_.ymin);
  }
  double du_dx() const { return 2.0 / (domain_.xmax - domain_.xmin); }
  double dv_dy() const { return 2.0 / (domain_.ymax - domain_.ymin); }

  double form(const double* tx, const double* ty) const {
    double acc = 0.0;
    for (int i = 0; i <= degree_; ++i) {
      double row = 0.0;
      for (int j = 0; j <= degree_; ++j) row += coeff_(i, j) * ty[j];
      acc += tx[i] * row;
    }
    return acc;
  }

  static void cheb_values(double u, int degree, double* t) {
    t[0] = 1.0;
    if (degree >= 1) t[1] = u;
    for (int k = 1; k < degree; ++k) t[k + 1] = 2.0 * u * t[k] - t[k - 1];
  }

  static void cheb_values_d1(double u, int degree, double* t, double* dt) {
    t[0] = 1.0;
    dt[0] = 0.0;
    if (degree >= 1) {
      t[1] = u;
      dt[1] = 1.0;
    }
    for (int k = 1; k < degree; ++k) {
      t[k + 1] = 2.0 * u * t[k] - t[k - 1];
      dt[k + 1] = 2.0 * t[k] + 2.0 * u * dt[k] - dt[k - 1];
    }
  }

  static void cheb_values_d2(double u, int degree, double* t, double* dt,
                             double* d2t) {
    t[0] = 1.0;
    dt[0] = 0.0;
    d2t[0] = 0.0;
    if (degree >= 1) {
      t[1] = u;
      dt[1] = 1.0;
      d2t[1] = 0.0;
    }
    for (int k = 1; k < degree; ++k) {
      t[k + 1] = 2.0 * u * t[k] - t[k - 1];
      dt[k + 1] = 2.0 * t[k] + 2.0 * u * dt[k] - dt[k - 1];
      d2t[k + 1] = 4.0 * dt[k] + 2.0 * u * d2t[k] - d2t[k - 1];
    }
  }

  Rect domain_;
  int degree_ = 0;
  Eigen::MatrixXd coeff_;
};

// Triangular lattice of potential wells as a sum of three plane-wave
// sinusoids 120 degrees apart.  Minima sit on the lattice sites at depth
// -3A, the lowest saddles at +A, so the min-to-saddle barrier is 4A and the
// amplitude is well_depth / 4.
inline double triangular_lattice_value(double well_depth,
                                       double lattice_constant, double x,
                                       double y) {
  const double pi = 3.14159265358979323846;
  const double s3 = std::sqrt(3.0);
  const double c = 2.0 * pi / lattice_constant;
  const double k1x = c, k1y = -c / s3;
  const double k2x = 0.0, k2y = 2.0 * c / s3;
  const double k3x = -k1x - k2x, k3y = -k1y - k2y;
  const double amp = well_depth / 4.0;
  return -amp * (std::cos(k1x * x + k1y * y) + std::cos(k2x * x + k2y * y) +
                 std::cos(k3x * x + k3y * y));
}

// Lattice sites (potential minima) inside the rectangle.
inline std::vector<Eigen::Vector2d> lattice_minima(double lattice_constant,
                                                   const Rect& domain) {
  const double a = lattice_constant;
  const double a2x = 0.5 * a, a2y = 0.5 * std::sqrt(3.0) * a;
  std::vector<Eigen::Vector2d> sites;
  const int span = static_cast<int>(
      std::ceil(std::max(domain.xmax - domain.xmin, domain.ymax - domain.ymin) /
                a)) + 2;
  for (int m = -span; m <= span; ++m)
    for (int n = -span; n <= span; ++n) {
      const double x = n * a + m * a2x;
      const double y = m * a2y;
      if (domain.contains(x, y)) sites.emplace_back(x, y);
    }
  return sites;
}

// Gridded energy surface with a globally smooth fitted extension.  Queries
// of the drift clamp to the domain boundary; clamping is counted and warned
// once.
class GriddedPotential {
 public:
  GriddedPotential(Eigen::MatrixXd samples, Rect domain, double fit_tolerance,
                   int max_degree = 12)
      : samples_(std::move(samples)), domain_(domain) {
    domain_.validate();
    if (samples_.cols() != 3)
      throw std::invalid_argument("GriddedPotential: samples must be (x,y,F)");
    const double lo = samples_.col(2).minCoeff();
    const double hi = samples_.col(2).maxCoeff();
    const double range = std::max(hi - lo, 1e-300);
    double best_err = std::numeric_limits<double>::infinity();
    for (int degree = 4; degree <= max_degree; degree += 2) {
      if ((degree + 1) * (degree + 1) > samples_.rows()) break;
      ChebyshevSurface2D trial =
          ChebyshevSurface2D::fit(samples_, domain_, degree);
      double err = 0.0;
      for (int k = 0; k < samples_.rows(); ++k)
        err = std::max(err, std::abs(trial.value(samples_(k, 0),
                                                 samples_(k, 1)) -
                                     samples_(k, 2)));
      err /= range;
      if (err < best_err) {
        best_err = err;
        fit_ = std::move(trial);
      }
      if (best_err <= fit_tolerance) break;
    }
    fit_error_ = best_err;
    if (fit_error_ > fit_tolerance) {
      std::ostringstream msg;
      msg << "GriddedPotential: fit error " << fit_error_
          << " exceeds tolerance " << fit_tolerance;
      throw std::invalid_argument(msg.str());
    }
  }

  const Eigen::MatrixXd& samples() const { return samples_; }
  const Rect& domain() const { return domain_; }
  const ChebyshevSurface2D& smooth_fit() const { return fit_; }
  double fit_error() const { return fit_error_; }
  long clamp_count() const { return clamp_count_.load(); }

  double value(double x, double y) const { return fit_.value(x, y); }
  Eigen::Vector2d gradient(double x, double y) const {
    return fit_.gradient(x, y);
  }
  double laplacian(double x, double y) const { return fit_.laplacian(x, y); }

  // Gradient at the query clamped into the fitted domain.
  Eigen::Vector2d gradient_clamped(double x, double y) const {
    note_if_clamped(x, y);
    return fit_.gradient(domain_.clamp_x(x), domain_.clamp_y(y));
  }
  double laplacian_clamped(double x, double y) const {
    note_if_clamped(x, y);
    return fit_.laplacian(domain_.clamp_x(x), domain_.clamp_y(y));
  }

  void negate() {
    samples_.col(2) = -samples_.col(2);
    fit_.negate();
  }

  void save_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "x,y,F\n";
    char buf[96];
    for (int k = 0; k < samples_.rows(); ++k) {
      std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g\n", samples_(k, 0),
                    samples_(k, 1), samples_(k, 2));
      out << buf;
    }
  }

  static GriddedPotential load_csv(const std::string& path,
                                   double fit_tolerance, int max_degree = 12) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::vector<std::array<double, 3>> rows;
    bool first = true;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      if (first) {
        first = false;
        if (line.find("x") != std::string::npos &&
            line.find("F") != std::string::npos)
          continue;  // header
      }
      std::array<double, 3> row{};
      std::istringstream ss(line);
      std::string cell;
      for (int j = 0; j < 3; ++j) {
        if (!std::getline(ss, cell, ','))
          throw std::runtime_error("malformed potential CSV line: " + line);
        row[j] = std::stod(cell);
      }
      rows.push_back(row);
    }
    if (rows.empty()) throw std::runtime_error("empty potential CSV");
    Eigen::MatrixXd samples(rows.size(), 3);
    for (size_t k = 0; k < rows.size(); ++k)
      for (int j = 0; j < 3; ++j) samples(k, j) = rows[k][j];
    Rect domain{samples.col(0).minCoeff(), samples.col(0).maxCoeff(),
                samples.col(1).minCoeff(), samples.col(1).maxCoeff()};
    return GriddedPotential(std::move(samples), domain, fit_tolerance,
                            max_degree);
  }

 private:
  void note_if_clamped(double x, double y) const {
    if (domain_.contains(x, y)) return;
    if (clamp_count_.fetch_add(1) == 0)
      std::fprintf(stderr,
                   "warning: potential drift query outside fitted domain; "
                   "clamping to boundary (suppressing further warnings)\n");
  }

  Eigen::MatrixXd samples_;
  Rect domain_;
  ChebyshevSurface2D fit_;
  double fit_error_ = 0.0;
  mutable std::atomic<long> clamp_count_{0};
};

// Samples the sinusoid lattice on a regular grid (at least `resolution`
// samples per lattice period) and fits the smooth surface.
inline std::shared_ptr<GriddedPotential> build_potential_lattice(
    double well_depth, double lattice_constant, Rect domain, int resolution,
    double fit_tolerance = 0.05, int max_degree = 12) {
  domain.validate();
  if (!(well_depth > 0.0))
    throw std::invalid_argument("build_potential_lattice: well_depth <= 0");
  if (!(lattice_constant > 0.0))
    throw std::invalid_argument(
        "build_potential_lattice: lattice_constant <= 0");
  if (resolution < 16)
    throw std::invalid_argument(
        "build_potential_lattice: resolution must be >= 16 per period");
  const double spacing = lattice_constant / resolution;
  const int nx =
      std::max(2, static_cast<int>(std::round((domain.xmax - domain.xmin) /
                                              spacing)) + 1);
  const int ny =
      std::max(2, static_cast<int>(std::round((domain.ymax - domain.ymin) /
                                              spacing)) + 1);
  Eigen::MatrixXd samples(static_cast<long>(nx) * ny, 3);
  long k = 0;
  for (int i = 0; i < nx; ++i) {
    const double x = domain.xmin + (domain.xmax - domain.xmin) * i / (nx - 1);
    for (int j = 0; j < ny; ++j) {
      const double y =
          domain.ymin + (domain.ymax - domain.ymin) * j / (ny - 1);
      samples(k, 0) = x;
      samples(k, 1) = y;
      samples(k, 2) = triangular_lattice_value(well_depth, lattice_constant,
                                               x, y);
      ++k;
    }
  }
  return std::make_shared<GriddedPotential>(std::move(samples), domain,
                                            fit_tolerance, max_degree);
}

// 2D atom-on-surface model: drift is the downhill force of the fitted
// surface, diffusion diag(0.1, 0.1), compound Poisson jumps with map
// e * (10, 10), position observed with noise variance 0.05 per axis.
inline std::pair<JumpDiffusionModel, ObservationModel> potential_surface_model(
    std::shared_ptr<GriddedPotential> potential, double jump_rate = 0.5,
    MarkDistribution marks = MarkDistribution::normal(),
    Vector prior_mean = Vector::Zero(2),
    double prior_var = 0.04, double obs_var = 0.05) {
  if (!potential)
    throw std::invalid_argument("potential_surface_model: null potential");
  JumpDiffusionModel model;
  model.dim = 2;
  model.drift = [potential](const Vector& x) {
    return Vector(-potential->gradient_clamped(x[0], x[1]));
  };
  model.drift_divergence = [potential](const Vector& x) {
    return -potential->laplacian_clamped(x[0], x[1]);
  };
  model.sigma = 0.1 * Matrix::Identity(2, 2);
  CompoundPoissonSpec cp;
  cp.rate = jump_rate;
  cp.mark_distribution = marks;
  cp.compensated = true;
  model.jump = JumpSpec::compound_poisson(cp, Vector::Constant(2, 10.0));
  model.prior = {std::move(prior_mean), Vector::Constant(2, prior_var)};
  const Rect dom = potential->domain();
  model.in_domain = [dom](const Vector& x) {
    return dom.contains(x[0], x[1]);
  };

  ObservationModel obs(
      2, [](const Vector& x) { return x; },
      obs_var * Matrix::Identity(2, 2));
  return {std::move(model), std::move(obs)};
}

}  // namespace bsdef
