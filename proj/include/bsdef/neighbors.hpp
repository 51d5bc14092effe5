#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace bsdef {

// Exact J-nearest-neighbor lookup over a fixed point set, ranked by
// (distance, index).  Strategy is chosen from the data: sorted scan in 1D,
// k-d tree otherwise; Brute is the reference path kept for cross-checks.
// Queries are const and allocation-free, safe to run concurrently.
class NeighborIndex {
 public:
  static constexpr int kMaxNeighbors = 64;

  enum class Method { Auto, Brute, Sorted1D, KdTree };

  struct Neighborhood {
    int count = 0;
    std::array<int, kMaxNeighbors> index;
    std::array<double, kMaxNeighbors> distance;
  };

  explicit NeighborIndex(const Eigen::MatrixXd& points,
                         Method method = Method::Auto)
      : n_(static_cast<int>(points.rows())),
        dim_(static_cast<int>(points.cols())) {
    if (n_ < 1) throw std::invalid_argument("NeighborIndex: empty point set");
    // row-major copy so per-point coordinates are contiguous
    coords_.resize(static_cast<size_t>(n_) * dim_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < dim_; ++j)
        coords_[static_cast<size_t>(i) * dim_ + j] = points(i, j);

    method_ = method;
    if (method_ == Method::Auto)
      method_ = (dim_ == 1) ? Method::Sorted1D : Method::KdTree;
    if (method_ == Method::Sorted1D && dim_ != 1)
      throw std::invalid_argument("NeighborIndex: Sorted1D requires dim == 1");

    switch (method_) {
      case Method::Sorted1D:
        build_sorted();
        break;
      case Method::KdTree:
        build_kdtree();
        break;
      default:
        break;
    }
  }

  int size() const { return n_; }
  int dim() const { return dim_; }
  Method method() const { return method_; }

  // Writes the J nearest points of x into out; J is clamped to the set size.
  void query(const double* x, int J, Neighborhood& out) const {
    J = std::min(J, n_);
    if (J < 1 || J > kMaxNeighbors)
      throw std::invalid_argument("NeighborIndex: J out of range");
    out.count = 0;
    switch (method_) {
      case Method::Sorted1D:
        query_sorted(x[0], J, out);
        break;
      case Method::KdTree:
        query_kdtree(x, J, out);
        break;
      default:
        query_brute(x, J, out);
        break;
    }
    for (int k = 0; k < out.count; ++k)
      out.distance[k] = std::sqrt(out.distance[k]);
  }

  void query(const Eigen::VectorXd& x, int J, Neighborhood& out) const {
    query(x.data(), J, out);
  }

 private:
  const double* point(int i) const {
    return coords_.data() + static_cast<size_t>(i) * dim_;
  }

  double dist2(const double* x, int i) const {
    const double* p = point(i);
    double s = 0.0;
    for (int j = 0; j < dim_; ++j) {
      const double r = x[j] - p[j];
      s += r * r;
    }
    return s;
  }

  // Bounded insertion keeping the J best (d2, idx) pairs in ascending order.
  static void insert_candidate(Neighborhood& out, int J, double d2, int idx) {
    int pos = out.count;
    while (pos > 0 && (out.distance[pos - 1] > d2 ||
                       (out.distance[pos - 1] == d2 &&
                        out.index[pos - 1] > idx)))
      --pos;
    if (pos >= J) return;
    const int stop = std::min(out.count, J - 1);
    for (int k = stop; k > pos; --k) {
      out.distance[k] = out.distance[k - 1];
      out.index[k] = out.index[k - 1];
    }
    out.distance[pos] = d2;
    out.index[pos] = idx;
    if (out.count < J) ++out.count;
  }

  void query_brute(const double* x, int J, Neighborhood& out) const {
    for (int i = 0; i < n_; ++i) {
      const double d2 = dist2(x, i);
      if (out.count == J && d2 > out.distance[J - 1]) continue;
      insert_candidate(out, J, d2, i);
    }
  }

  // ---- 1D sorted scan ----

  void build_sorted() {
    order_.resize(n_);
    for (int i = 0; i < n_; ++i) order_[i] = i;
    std::sort(order_.begin(), order_.end(), [&](int a, int b) {
      const double ca = coords_[a], cb = coords_[b];
      return ca < cb || (ca == cb && a < b);
    });
    sorted_coords_.resize(n_);
    for (int i = 0; i < n_; ++i) sorted_coords_[i] = coords_[order_[i]];
  }

  void query_sorted(double x, int J, Neighborhood& out) const {
    int r = static_cast<int>(
        std::lower_bound(sorted_coords_.begin(), sorted_coords_.end(), x) -
        sorted_coords_.begin());
    int l = r - 1;
    for (int taken = 0; taken < J; ++taken) {
      const double dl = (l >= 0) ? x - sorted_coords_[l] : -1.0;
      const double dr = (r < n_) ? sorted_coords_[r] - x : -1.0;
      int pick;
      if (l >= 0 && (r >= n_ || dl < dr ||
                     (dl == dr && order_[l] < order_[r]))) {
        pick = l--;
      } else {
        pick = r++;
      }
      const double d = (sorted_coords_[pick] >= x)
                           ? sorted_coords_[pick] - x
                           : x - sorted_coords_[pick];
      insert_candidate(out, J, d * d, order_[pick]);
    }
  }

  // ---- k-d tree ----

  struct Node {
    int split_dim = -1;   // -1 marks a leaf
    double split_val = 0.0;
    int left = -1, right = -1;
    int begin = 0, end = 0;  // leaf range into perm_
  };

  static constexpr int kLeafSize = 8;

  void build_kdtree() {
    perm_.resize(n_);
    for (int i = 0; i < n_; ++i) perm_[i] = i;
    nodes_.reserve(2 * (n_ / kLeafSize + 2));
    root_ = build_node(0, n_);
  }

  int build_node(int begin, int end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    if (end - begin <= kLeafSize) {
      nodes_[id].begin = begin;
      nodes_[id].end = end;
      return id;
    }
    // split along the dimension of largest extent
    int sd = 0;
    double best_extent = -1.0;
    for (int j = 0; j < dim_; ++j) {
      double lo = point(perm_[begin])[j], hi = lo;
      for (int k = begin + 1; k < end; ++k) {
        const double v = point(perm_[k])[j];
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
      if (hi - lo > best_extent) {
        best_extent = hi - lo;
        sd = j;
      }
    }
    const int mid = begin + (end - begin) / 2;
    std::nth_element(perm_.begin() + begin, perm_.begin() + mid,
                     perm_.begin() + end, [&](int a, int b) {
                       const double va = point(a)[sd], vb = point(b)[sd];
                       return va < vb || (va == vb && a < b);
                     });
    nodes_[id].split_dim = sd;
    nodes_[id].split_val = point(perm_[mid])[sd];
    const int left = build_node(begin, mid);
    const int right = build_node(mid, end);
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  void query_kdtree(const double* x, int J, Neighborhood& out) const {
    search_node(root_, x, J, out);
  }

  void search_node(int id, const double* x, int J, Neighborhood& out) const {
    const Node& node = nodes_[id];
    if (node.split_dim < 0) {
      for (int k = node.begin; k < node.end; ++k) {
        const int i = perm_[k];
        const double d2 = dist2(x, i);
        if (out.count == J && d2 > out.distance[J - 1]) continue;
        insert_candidate(out, J, d2, i);
      }
      return;
    }
    const double delta = x[node.split_dim] - node.split_val;
    const int near = (delta < 0.0) ? node.left : node.right;
    const int far = (delta < 0.0) ? node.right : node.left;
    search_node(near, x, J, out);
    if (out.count < J || delta * delta <= out.distance[out.count - 1])
      search_node(far, x, J, out);
  }

  int n_;
  int dim_;
  Method method_;
  std::vector<double> coords_;

  std::vector<int> order_;             // Sorted1D
  std::vector<double> sorted_coords_;  // Sorted1D

  std::vector<Node> nodes_;  // KdTree
  std::vector<int> perm_;
  int root_ = -1;
};

}  // namespace bsdef
