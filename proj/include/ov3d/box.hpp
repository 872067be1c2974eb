#pragma once

#include <map>
#include <string>

#include "ov3d/cluster.hpp"
#include "ov3d/detection.hpp"
#include "ov3d/geom.hpp"
#include "ov3d/hull.hpp"

namespace ov3d {

/// Oriented box on the ground plane (z up). size = (length, width, height),
/// yaw about +z along the length axis, in (-pi, pi].
struct Box3D {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  Eigen::Vector3d size = Eigen::Vector3d::Ones();
  double yaw{0.0};
  std::string label;
  double score{0.0};
  Eigen::Vector2d velocity = Eigen::Vector2d::Zero();

  bool valid() const {
    return (size.array() > 0).all() && yaw > -kPi && yaw <= kPi && center.allFinite();
  }

  /// Ground-plane corners, counter-clockwise starting front-left.
  std::array<Eigen::Vector2d, 4> bev_corners() const;
};

/// Per-class (length, width, height) in meters.
using ShapePriorTable = std::map<std::string, Eigen::Vector3d>;

enum class InflationVariant {
  kMedoidPrior,     // medoid center, prior size, hinted yaw
  kCalipersFull,    // calipers center, size and yaw
  kMedoidCalipers,  // medoid center, calipers size and yaw
};

struct InflationStrategy {
  InflationVariant variant{InflationVariant::kCalipersFull};
  ShapePriorTable priors;
  double extent_floor{kDegenerateExtentFloor};
};

const char* to_string(InflationVariant v);
InflationVariant parse_variant(const std::string& name);

/// Fits a box to a non-empty segment given in the evaluation frame.
/// Velocity is always zero. Dimensions below `extent_floor` are raised to it.
Box3D inflate(const PointCloudd& segment, const InflationStrategy& strategy, const std::string& label, double score,
              std::optional<double> heading_hint = std::nullopt);

/// Copies label and score from the detection; geometry is left untouched.
Box3D assign_label(const InstanceDetection& det, Box3D box);

}  // namespace ov3d
