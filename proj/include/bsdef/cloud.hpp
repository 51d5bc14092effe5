#pragma once

#include <stdexcept>

#include <Eigen/Dense>

namespace bsdef {

// Adaptive space-point set with per-point density values.
struct PointCloud {
  Eigen::MatrixXd points;  // N x d
  Eigen::VectorXd values;  // N, nonnegative
  int time_index = 0;

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }

  void check() const {
    if (points.rows() < 2)
      throw std::invalid_argument("PointCloud: needs at least 2 points");
    if (values.size() != points.rows())
      throw std::invalid_argument("PointCloud: values/points size mismatch");
    if (!values.allFinite() || (values.array() < 0.0).any())
      throw std::invalid_argument("PointCloud: values must be finite and >= 0");
  }
};

}  // namespace bsdef
