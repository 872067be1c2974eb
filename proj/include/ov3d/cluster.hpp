#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <unordered_map>
#include <vector>

#include "ov3d/geom.hpp"

namespace ov3d {

struct DbscanParams {
  double eps{0.75};
  int min_pts{5};

  void validate() const {
    if (!(eps > 0.0)) throw ConfigError("dbscan eps must be positive");
    if (min_pts < 1) throw ConfigError("dbscan min_pts must be >= 1");
  }
};

inline constexpr int kNoise = -1;

struct ClusterLabeling {
  std::vector<int> labels;                // kNoise or 0..K-1
  std::vector<std::size_t> cluster_sizes;  // indexed by cluster id

  std::size_t num_clusters() const { return cluster_sizes.size(); }
};

namespace detail {

/// Exact fixed-radius neighbor search: uniform grid with cell size eps, or a
/// linear scan for small inputs.
template <typename Scalar>
class RadiusSearch {
 public:
  static constexpr Eigen::Index kBruteForceBelow = 64;

  // Cells are a hair wider than eps so rounding in p / cell can never put two
  // points within eps more than one cell apart.
  RadiusSearch(const Points3<Scalar>& pts, Scalar eps)
      : pts_(pts), cell_size_(eps * (1 + std::sqrt(std::numeric_limits<Scalar>::epsilon()))), eps2_(eps * eps) {
    if (pts.cols() < kBruteForceBelow) return;
    use_grid_ = true;
    cell_of_.reserve(static_cast<std::size_t>(pts.cols()));
    for (Eigen::Index i = 0; i < pts.cols(); ++i) {
      const Cell c = cell(pts.col(i));
      cell_of_.push_back(c);
      grid_[c].push_back(i);
    }
  }

  /// Calls f(j, squared_distance) for every j with |p_i - p_j| <= eps, i included.
  template <typename F>
  void for_each(Eigen::Index i, F&& f) const {
    const auto p = pts_.col(i);
    if (!use_grid_) {
      for (Eigen::Index j = 0; j < pts_.cols(); ++j) visit(p, j, f);
      return;
    }
    const Cell& c = cell_of_[static_cast<std::size_t>(i)];
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = grid_.find(Cell{c[0] + dx, c[1] + dy, c[2] + dz});
          if (it == grid_.end()) continue;
          for (const Eigen::Index j : it->second) visit(p, j, f);
        }
  }

  std::size_t count(Eigen::Index i) const {
    std::size_t n = 0;
    for_each(i, [&n](Eigen::Index, Scalar) { ++n; });
    return n;
  }

 private:
  using Cell = std::array<std::int64_t, 3>;
  struct CellHash {
    std::size_t operator()(const Cell& c) const noexcept {
      std::uint64_t h = 1469598103934665603ull;
      for (const auto v : c) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ull;
      return static_cast<std::size_t>(h);
    }
  };

  template <typename P, typename F>
  void visit(const P& p, Eigen::Index j, F& f) const {
    const Scalar dx = p(0) - pts_(0, j);
    const Scalar dy = p(1) - pts_(1, j);
    const Scalar dz = p(2) - pts_(2, j);
    const Scalar d2 = dx * dx + dy * dy + dz * dz;
    if (d2 <= eps2_) f(j, d2);
  }

  template <typename P>
  Cell cell(const P& p) const {
    return {static_cast<std::int64_t>(std::floor(p(0) / cell_size_)),
            static_cast<std::int64_t>(std::floor(p(1) / cell_size_)),
            static_cast<std::int64_t>(std::floor(p(2) / cell_size_))};
  }

  const Points3<Scalar>& pts_;
  Scalar cell_size_, eps2_;
  bool use_grid_{false};
  std::vector<Cell> cell_of_;
  std::unordered_map<Cell, std::vector<Eigen::Index>, CellHash> grid_;
};

template <typename Scalar>
bool lex_less(const Points3<Scalar>& pts, Eigen::Index a, Eigen::Index b) {
  for (int k = 0; k < 3; ++k) {
    if (pts(k, a) != pts(k, b)) return pts(k, a) < pts(k, b);
  }
  return false;
}

}  // namespace detail

/// DBSCAN over 3D points. A point is core when at least min_pts points
/// (itself included) lie within eps. Clusters are connected components of
/// core points; ids follow the lowest core index of each component. A border
/// point joins the cluster of its nearest core neighbor, ties going to the
/// lexicographically smallest core coordinates, so the partition does not
/// depend on input order.
template <typename Scalar>
ClusterLabeling dbscan(const PointCloud<Scalar>& cloud, const DbscanParams& params) {
  params.validate();
  const Points3<Scalar>& pts = cloud.positions;
  const Eigen::Index n = pts.cols();
  ClusterLabeling out;
  out.labels.assign(static_cast<std::size_t>(n), kNoise);
  if (n == 0) return out;

  const detail::RadiusSearch<Scalar> search(pts, static_cast<Scalar>(params.eps));
  std::vector<char> core(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    core[static_cast<std::size_t>(i)] = search.count(i) >= static_cast<std::size_t>(params.min_pts);
  }

  std::vector<Eigen::Index> stack;
  for (Eigen::Index seed = 0; seed < n; ++seed) {
    const auto s = static_cast<std::size_t>(seed);
    if (!core[s] || out.labels[s] != kNoise) continue;
    const int id = static_cast<int>(out.cluster_sizes.size());
    out.cluster_sizes.push_back(0);
    out.labels[s] = id;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const Eigen::Index i = stack.back();
      stack.pop_back();
      search.for_each(i, [&](Eigen::Index j, Scalar) {
        const auto u = static_cast<std::size_t>(j);
        if (core[u] && out.labels[u] == kNoise) {
          out.labels[u] = id;
          stack.push_back(j);
        }
      });
    }
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const auto s = static_cast<std::size_t>(i);
    if (core[s]) continue;
    Eigen::Index best = -1;
    Scalar best_d2 = std::numeric_limits<Scalar>::infinity();
    search.for_each(i, [&](Eigen::Index j, Scalar d2) {
      if (!core[static_cast<std::size_t>(j)]) return;
      if (d2 < best_d2 || (d2 == best_d2 && detail::lex_less(pts, j, best))) {
        best = j;
        best_d2 = d2;
      }
    });
    if (best >= 0) out.labels[s] = out.labels[static_cast<std::size_t>(best)];
  }

  for (const int l : out.labels) {
    if (l != kNoise) ++out.cluster_sizes[static_cast<std::size_t>(l)];
  }
  return out;
}

/// Largest cluster by point count, lowest id on ties.
template <typename Scalar>
PointCloud<Scalar> densest_cluster(const PointCloud<Scalar>& cloud, const ClusterLabeling& labeling) {
  if (labeling.labels.size() != static_cast<std::size_t>(cloud.size())) {
    throw DimensionMismatchError("densest_cluster: labeling does not match cloud");
  }
  if (labeling.cluster_sizes.empty()) throw AllNoiseError("every point was labeled noise");
  const auto best = static_cast<int>(
      std::max_element(labeling.cluster_sizes.begin(), labeling.cluster_sizes.end()) - labeling.cluster_sizes.begin());
  std::vector<Eigen::Index> keep;
  keep.reserve(labeling.cluster_sizes[static_cast<std::size_t>(best)]);
  for (std::size_t i = 0; i < labeling.labels.size(); ++i) {
    if (labeling.labels[i] == best) keep.push_back(static_cast<Eigen::Index>(i));
  }
  return select(cloud, keep);
}

/// Input point minimizing the summed Euclidean distance to all others, lowest
/// index on ties. Quadratic in the point count.
template <typename Scalar>
Vec3<Scalar> medoid(const PointCloud<Scalar>& cloud) {
  const Points3<Scalar>& pts = cloud.positions;
  const Eigen::Index n = pts.cols();
  if (n == 0) throw EmptySegmentError("medoid of an empty point set");
  std::vector<Scalar> sums(static_cast<std::size_t>(n), Scalar(0));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const Scalar d = (pts.col(i) - pts.col(j)).norm();
      sums[static_cast<std::size_t>(i)] += d;
      sums[static_cast<std::size_t>(j)] += d;
    }
  }
  const auto best = std::min_element(sums.begin(), sums.end()) - sums.begin();
  return pts.col(best);
}

}  // namespace ov3d
