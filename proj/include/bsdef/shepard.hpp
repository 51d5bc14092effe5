#pragma once

#include <stdexcept>

#include <Eigen/Dense>

#include "bsdef/cloud.hpp"
#include "bsdef/neighbors.hpp"

namespace bsdef {

// Weighting of the J-nearest-neighbor average.  Inverse is standard inverse
// distance weighting; AsPrinted puts the distance itself in the numerator
// (kept selectable for comparison runs).
enum class ShepardMode { Inverse, AsPrinted };

// Meshfree extension of cloud values to all of R^d by distance-weighted
// averaging over the J nearest cloud points.  Evaluation at a cloud point
// returns that point's stored value exactly; elsewhere the weights form a
// convex combination, so results stay within the neighbor value range.
class ShepardInterpolant {
 public:
  ShepardInterpolant(const Eigen::MatrixXd& points,
                     const Eigen::VectorXd& values, int neighbor_count,
                     ShepardMode mode = ShepardMode::Inverse,
                     NeighborIndex::Method method = NeighborIndex::Method::Auto)
      : index_(points, method), values_(values), neighbors_(neighbor_count),
        mode_(mode) {
    if (neighbor_count < 1 || neighbor_count > index_.size())
      throw std::invalid_argument(
          "ShepardInterpolant: need 1 <= J <= point count");
    if (values_.size() != index_.size())
      throw std::invalid_argument("ShepardInterpolant: values size mismatch");
  }

  ShepardInterpolant(const PointCloud& cloud, int neighbor_count,
                     ShepardMode mode = ShepardMode::Inverse,
                     NeighborIndex::Method method = NeighborIndex::Method::Auto)
      : ShepardInterpolant(cloud.points, cloud.values, neighbor_count, mode,
                           method) {}

  int neighbor_count() const { return neighbors_; }

  double operator()(const Eigen::VectorXd& x) const { return eval(x.data()); }

  double eval(const double* x) const {
    NeighborIndex::Neighborhood nb;
    index_.query(x, neighbors_, nb);
    if (nb.distance[0] == 0.0) return values_[nb.index[0]];
    double wsum = 0.0, vsum = 0.0;
    if (mode_ == ShepardMode::Inverse) {
      for (int k = 0; k < nb.count; ++k) {
        const double w = 1.0 / nb.distance[k];
        wsum += w;
        vsum += w * values_[nb.index[k]];
      }
    } else {
      for (int k = 0; k < nb.count; ++k) {
        const double w = nb.distance[k];
        wsum += w;
        vsum += w * values_[nb.index[k]];
      }
    }
    return vsum / wsum;
  }

 private:
  NeighborIndex index_;
  Eigen::VectorXd values_;
  int neighbors_;
  ShepardMode mode_;
};

}  // namespace bsdef
