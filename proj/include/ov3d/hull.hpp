#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ov3d/geom.hpp"

namespace ov3d {

/// Extent given to the collapsed axes of degenerate (1- or 2-vertex) hulls, meters.
inline constexpr double kDegenerateExtentFloor = 0.2;
/// Relative area difference below which two caliper rectangles count as tied.
inline constexpr double kAreaTieTolerance = 1e-11;

/// Convex polygon, counter-clockwise, no repeated or collinear vertices.
/// Degenerate inputs give a 1-vertex (point) or 2-vertex (segment) hull.
template <typename Scalar>
struct Hull2D {
  std::vector<Vec2<Scalar>> vertices;

  std::size_t size() const { return vertices.size(); }

  Scalar signed_area() const {
    Scalar a = 0;
    for (std::size_t i = 0; i < vertices.size(); ++i) {
      const auto& p = vertices[i];
      const auto& q = vertices[(i + 1) % vertices.size()];
      a += p.x() * q.y() - q.x() * p.y();
    }
    return a / 2;
  }
};

template <typename Scalar>
Scalar cross2(const Vec2<Scalar>& o, const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

/// Andrew's monotone chain. Collinear boundary points are dropped.
template <typename Scalar>
Hull2D<Scalar> convex_hull_2d(std::vector<Vec2<Scalar>> pts) {
  if (pts.empty()) throw Error("convex_hull_2d: empty input");
  std::sort(pts.begin(), pts.end(), [](const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  const std::size_t n = pts.size();
  if (n == 1) return {std::move(pts)};

  std::vector<Vec2<Scalar>> h(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = n - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross2(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return {std::move(h)};
}

template <typename Scalar>
Hull2D<Scalar> convex_hull_2d(const Points2<Scalar>& pts) {
  std::vector<Vec2<Scalar>> v(static_cast<std::size_t>(pts.cols()));
  for (Eigen::Index i = 0; i < pts.cols(); ++i) v[static_cast<std::size_t>(i)] = pts.col(i);
  return convex_hull_2d(std::move(v));
}

/// Rectangle in the plane: extent = (length, width) with length >= width and
/// yaw pointing along the length axis, folded into (-pi/2, pi/2].
template <typename Scalar>
struct OrientedRect {
  Vec2<Scalar> center = Vec2<Scalar>::Zero();
  Vec2<Scalar> extent = Vec2<Scalar>::Zero();
  Scalar yaw{0};

  Scalar area() const { return extent.x() * extent.y(); }

  bool contains(const Vec2<Scalar>& p, Scalar tol = 0) const {
    const Vec2<Scalar> axis(std::cos(yaw), std::sin(yaw));
    const Vec2<Scalar> d = p - center;
    const Scalar along = d.dot(axis);
    const Scalar across = axis.x() * d.y() - axis.y() * d.x();
    return std::abs(along) <= extent.x() / 2 + tol && std::abs(across) <= extent.y() / 2 + tol;
  }
};

/// Folds a rectangle heading into (-pi/2, pi/2]; rectangles are symmetric under a half turn.
template <typename Scalar>
Scalar fold_half_turn(Scalar yaw) {
  const Scalar pi = Scalar(kPi);
  yaw = normalize_angle(yaw);
  if (yaw > pi / 2) yaw -= pi;
  if (yaw <= -pi / 2) yaw += pi;
  return yaw;
}

namespace detail {

template <typename Scalar>
OrientedRect<Scalar> make_rect(const Vec2<Scalar>& center, const Vec2<Scalar>& axis_u, Scalar ext_u,
                               const Vec2<Scalar>& axis_v, Scalar ext_v) {
  OrientedRect<Scalar> r;
  r.center = center;
  if (ext_u >= ext_v) {
    r.extent = {ext_u, ext_v};
    r.yaw = fold_half_turn(std::atan2(axis_u.y(), axis_u.x()));
  } else {
    r.extent = {ext_v, ext_u};
    r.yaw = fold_half_turn(std::atan2(axis_v.y(), axis_v.x()));
  }
  return r;
}

}  // namespace detail

/// Minimum-area enclosing rectangle by rotating calipers. One side of the
/// result is collinear with a hull edge. Degenerate hulls get `extent_floor`
/// on their collapsed axes.
template <typename Scalar>
OrientedRect<Scalar> min_area_rect(const Hull2D<Scalar>& hull, Scalar extent_floor = Scalar(kDegenerateExtentFloor)) {
  const auto& v = hull.vertices;
  const std::size_t n = v.size();
  if (n == 0) throw Error("min_area_rect: empty hull");
  if (n == 1) {
    OrientedRect<Scalar> r;
    r.center = v[0];
    r.extent = {extent_floor, extent_floor};
    return r;
  }
  if (n == 2) {
    const Vec2<Scalar> d = v[1] - v[0];
    const Vec2<Scalar> u = d.normalized();
    const Vec2<Scalar> w(-u.y(), u.x());
    return detail::make_rect<Scalar>((v[0] + v[1]) / 2, u, std::max(d.norm(), extent_floor), w, extent_floor);
  }

  const auto next = [n](std::size_t i) { return (i + 1) % n; };
  const auto dot_at = [&v](std::size_t j, const Vec2<Scalar>& dir) { return v[j].dot(dir); };

  // Caliper pointers for the first edge: farthest along the edge, farthest
  // from it, and farthest against it.
  std::size_t right = 0, top = 0, left = 0;
  {
    const Vec2<Scalar> e = (v[1] - v[0]).normalized();
    const Vec2<Scalar> nrm(-e.y(), e.x());
    for (std::size_t j = 1; j < n; ++j) {
      if (dot_at(j, e) > dot_at(right, e)) right = j;
      if (dot_at(j, nrm) > dot_at(top, nrm)) top = j;
      if (dot_at(j, e) < dot_at(left, e)) left = j;
    }
  }

  std::vector<OrientedRect<Scalar>> candidates;
  candidates.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2<Scalar>& a = v[i];
    const Vec2<Scalar> e = (v[next(i)] - a).normalized();
    const Vec2<Scalar> nrm(-e.y(), e.x());
    for (std::size_t s = 0; s < n && dot_at(next(right), e) >= dot_at(right, e); ++s) right = next(right);
    for (std::size_t s = 0; s < n && dot_at(next(top), nrm) >= dot_at(top, nrm); ++s) top = next(top);
    for (std::size_t s = 0; s < n && dot_at(next(left), e) <= dot_at(left, e); ++s) left = next(left);

    const Scalar max_e = (v[right] - a).dot(e);
    const Scalar min_e = (v[left] - a).dot(e);
    const Scalar max_n = (v[top] - a).dot(nrm);
    const Vec2<Scalar> center = a + e * ((max_e + min_e) / 2) + nrm * (max_n / 2);
    candidates.push_back(detail::make_rect<Scalar>(center, e, max_e - min_e, nrm, max_n));
  }

  // Several edges can tie exactly (every edge of an acute triangle gives twice
  // its area). Pick among near-ties by elongation, which does not depend on
  // where the hull starts, so rotated inputs resolve the tie the same way.
  Scalar min_area = std::numeric_limits<Scalar>::infinity();
  for (const auto& c : candidates) min_area = std::min(min_area, c.area());
  const Scalar band = min_area * (1 + Scalar(kAreaTieTolerance));
  const OrientedRect<Scalar>* best = nullptr;
  for (const auto& c : candidates) {
    if (c.area() > band) continue;
    if (!best || c.extent.x() > best->extent.x() * (1 + Scalar(kAreaTieTolerance))) best = &c;
  }
  return *best;
}

}  // namespace ov3d
