#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <vector>

#include "ov3d/errors.hpp"

namespace ov3d {

/// Double pi. EIGEN_PI is a long double and promotes mixed comparisons.
inline constexpr double kPi = std::numbers::pi;

/// Cameras reject anything closer than this along the optical axis (meters).
inline constexpr double kMinCameraDepth = 0.1;

template <typename Scalar>
using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Points3 = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;
template <typename Scalar>
using Points2 = Eigen::Matrix<Scalar, 2, Eigen::Dynamic>;

/// Rigid transform p -> R p + t. Quaternions are stored scalar-first (w,x,y,z)
/// when serialized, matching nuScenes calibration records.
template <typename Scalar>
struct Se3Pose {
  Eigen::Quaternion<Scalar> rotation = Eigen::Quaternion<Scalar>::Identity();
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  Se3Pose() = default;
  Se3Pose(const Eigen::Quaternion<Scalar>& q, const Vec3<Scalar>& t)
      : rotation(q.normalized()), translation(t) {}

  static Se3Pose identity() { return {}; }

  Vec3<Scalar> operator*(const Vec3<Scalar>& p) const { return rotation * p + translation; }

  Eigen::Matrix<Scalar, 3, 3> rotation_matrix() const { return rotation.toRotationMatrix(); }
};

using Se3Posed = Se3Pose<double>;

/// Applies b first, then a.
template <typename Scalar>
Se3Pose<Scalar> compose(const Se3Pose<Scalar>& a, const Se3Pose<Scalar>& b) {
  return Se3Pose<Scalar>(a.rotation * b.rotation, a.rotation * b.translation + a.translation);
}

template <typename Scalar>
Se3Pose<Scalar> inverse(const Se3Pose<Scalar>& p) {
  const Eigen::Quaternion<Scalar> q_inv = p.rotation.conjugate();
  return Se3Pose<Scalar>(q_inv, -(q_inv * p.translation));
}

/// Rotation about +z by `yaw` radians.
template <typename Scalar>
Se3Pose<Scalar> yaw_pose(Scalar yaw, const Vec3<Scalar>& t = Vec3<Scalar>::Zero()) {
  return Se3Pose<Scalar>(Eigen::Quaternion<Scalar>(Eigen::AngleAxis<Scalar>(yaw, Vec3<Scalar>::UnitZ())), t);
}

enum class Frame { kSensor, kCamera, kEgo, kGlobal };

/// Columnar cloud: one column per point.
template <typename Scalar>
struct PointCloud {
  Points3<Scalar> positions;
  std::optional<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> intensity;
  std::optional<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> ring;
  Frame frame = Frame::kSensor;

  PointCloud() : positions(3, 0) {}
  explicit PointCloud(Points3<Scalar> p, Frame f = Frame::kSensor) : positions(std::move(p)), frame(f) {}

  Eigen::Index size() const { return positions.cols(); }
  bool empty() const { return positions.cols() == 0; }
  auto point(Eigen::Index i) const { return positions.col(i); }

  bool is_finite() const { return positions.allFinite(); }
};

using PointCloudd = PointCloud<double>;

/// Sub-cloud of the given columns, attributes carried along.
template <typename Scalar, typename IndexRange>
PointCloud<Scalar> select(const PointCloud<Scalar>& cloud, const IndexRange& indices) {
  const auto n = static_cast<Eigen::Index>(std::size(indices));
  PointCloud<Scalar> out(Points3<Scalar>(3, n), cloud.frame);
  if (cloud.intensity) out.intensity.emplace(n);
  if (cloud.ring) out.ring.emplace(n);
  Eigen::Index k = 0;
  for (const auto i : indices) {
    const auto idx = static_cast<Eigen::Index>(i);
    out.positions.col(k) = cloud.positions.col(idx);
    if (cloud.intensity) (*out.intensity)(k) = (*cloud.intensity)(idx);
    if (cloud.ring) (*out.ring)(k) = (*cloud.ring)(idx);
    ++k;
  }
  return out;
}

template <typename Scalar>
PointCloud<Scalar> transform_cloud(const Se3Pose<Scalar>& pose, const PointCloud<Scalar>& cloud, Frame target) {
  PointCloud<Scalar> out = cloud;
  out.positions = (pose.rotation_matrix() * cloud.positions).colwise() + pose.translation;
  out.frame = target;
  return out;
}

template <typename Scalar>
PointCloud<Scalar> transform_cloud(const Se3Pose<Scalar>& pose, const PointCloud<Scalar>& cloud) {
  return transform_cloud(pose, cloud, cloud.frame);
}

/// Distortion-free pinhole camera. `sensor_from_reference` maps ego-frame
/// points into the camera frame (z forward, x right, y down).
template <typename Scalar>
struct CameraModel {
  Scalar fx{1}, fy{1}, cx{0}, cy{0};
  int width{1}, height{1};
  Se3Pose<Scalar> sensor_from_reference;

  bool valid() const {
    return fx > 0 && fy > 0 && width > 0 && height > 0 && cx >= 0 && cx < width && cy >= 0 && cy < height;
  }

  bool in_bounds(Scalar u, Scalar v) const { return u >= 0 && u < width && v >= 0 && v < height; }
};

using CameraModeld = CameraModel<double>;

template <typename Scalar>
CameraModel<Scalar> make_camera(Scalar fx, Scalar fy, Scalar cx, Scalar cy, int width, int height,
                                const Se3Pose<Scalar>& sensor_from_reference = {}) {
  CameraModel<Scalar> cam{fx, fy, cx, cy, width, height, sensor_from_reference};
  if (!cam.valid()) throw ConfigError("invalid camera intrinsics");
  return cam;
}

/// Pixel <-> point correspondences of a projected cloud. Only points in front
/// of the camera and inside the image are stored.
template <typename Scalar>
struct PixelPointMap {
  Points2<Scalar> pixel_uv;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> depth;
  std::vector<std::int64_t> source_index;
  int width{0}, height{0};

  Eigen::Index size() const { return pixel_uv.cols(); }
};

using PixelPointMapd = PixelPointMap<double>;

/// Projects a camera-frame cloud. Points with z <= kMinCameraDepth or landing
/// outside the image are dropped.
template <typename Scalar>
PixelPointMap<Scalar> project_cloud(const CameraModel<Scalar>& cam, const PointCloud<Scalar>& cloud) {
  PixelPointMap<Scalar> map;
  map.width = cam.width;
  map.height = cam.height;
  const Eigen::Index n = cloud.size();
  std::vector<Eigen::Index> kept;
  std::vector<Vec2<Scalar>> uv;
  kept.reserve(static_cast<std::size_t>(n));
  uv.reserve(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto p = cloud.positions.col(i);
    if (!(p.z() > Scalar(kMinCameraDepth))) continue;
    const Scalar u = cam.fx * p.x() / p.z() + cam.cx;
    const Scalar v = cam.fy * p.y() / p.z() + cam.cy;
    if (!cam.in_bounds(u, v)) continue;
    kept.push_back(i);
    uv.emplace_back(u, v);
  }
  const auto m = static_cast<Eigen::Index>(kept.size());
  map.pixel_uv.resize(2, m);
  map.depth.resize(m);
  map.source_index.resize(kept.size());
  for (Eigen::Index k = 0; k < m; ++k) {
    map.pixel_uv.col(k) = uv[static_cast<std::size_t>(k)];
    map.depth(k) = cloud.positions(2, kept[static_cast<std::size_t>(k)]);
    map.source_index[static_cast<std::size_t>(k)] = kept[static_cast<std::size_t>(k)];
  }
  return map;
}

template <typename Scalar>
Vec3<Scalar> backproject_pixel(const CameraModel<Scalar>& cam, Scalar u, Scalar v, Scalar depth) {
  if (!(depth > 0)) throw InvalidDepthError("backproject_pixel: depth must be positive");
  return {(u - cam.cx) * depth / cam.fx, (v - cam.cy) * depth / cam.fy, depth};
}

/// Wraps an angle into (-pi, pi].
template <typename Scalar>
Scalar normalize_angle(Scalar a) {
  const Scalar two_pi = Scalar(2 * kPi);
  a = std::fmod(a, two_pi);
  if (a <= -Scalar(kPi)) a += two_pi;
  if (a > Scalar(kPi)) a -= two_pi;
  return a;
}

/// Yaw of a pose's rotation about +z (heading of its x axis in the xy plane).
template <typename Scalar>
Scalar yaw_of(const Se3Pose<Scalar>& pose) {
  const Vec3<Scalar> x = pose.rotation * Vec3<Scalar>::UnitX();
  return std::atan2(x.y(), x.x());
}

}  // namespace ov3d
