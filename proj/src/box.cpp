#include "ov3d/box.hpp"

#include <cmath>

namespace ov3d {

std::array<Eigen::Vector2d, 4> Box3D::bev_corners() const {
  const Eigen::Vector2d c = center.head<2>();
  const Eigen::Vector2d ax(std::cos(yaw), std::sin(yaw));
  const Eigen::Vector2d ay(-ax.y(), ax.x());
  const Eigen::Vector2d hl = ax * (size.x() / 2), hw = ay * (size.y() / 2);
  return {c + hl + hw, c - hl + hw, c - hl - hw, c + hl - hw};
}

const char* to_string(InflationVariant v) {
  switch (v) {
    case InflationVariant::kMedoidPrior: return "medoid_prior";
    case InflationVariant::kCalipersFull: return "calipers_full";
    case InflationVariant::kMedoidCalipers: return "medoid_calipers";
  }
  return "?";
}

InflationVariant parse_variant(const std::string& name) {
  if (name == "medoid_prior") return InflationVariant::kMedoidPrior;
  if (name == "calipers_full") return InflationVariant::kCalipersFull;
  if (name == "medoid_calipers") return InflationVariant::kMedoidCalipers;
  throw ConfigError("unknown inflation strategy '" + name + "'");
}

Box3D inflate(const PointCloudd& segment, const InflationStrategy& strategy, const std::string& label, double score,
              std::optional<double> heading_hint) {
  if (segment.empty()) throw EmptySegmentError("inflate: empty segment");
  const auto& pts = segment.positions;
  const double z_min = pts.row(2).minCoeff();
  const double z_max = pts.row(2).maxCoeff();
  const double floor = strategy.extent_floor;

  Box3D box;
  box.label = label;
  box.score = score;
  box.center.z() = (z_min + z_max) / 2;

  if (strategy.variant == InflationVariant::kMedoidPrior) {
    const auto prior = strategy.priors.find(label);
    if (prior == strategy.priors.end()) throw ConfigError("no shape prior for class '" + label + "'");
    box.center.head<2>() = medoid(segment).head<2>();
    box.size = prior->second;
    box.yaw = normalize_angle(heading_hint.value_or(0.0));
    return box;
  }

  const OrientedRect<double> rect = min_area_rect(convex_hull_2d<double>(pts.topRows<2>()), floor);
  box.size = {std::max(rect.extent.x(), floor), std::max(rect.extent.y(), floor), std::max(z_max - z_min, floor)};
  box.yaw = rect.yaw;
  if (strategy.variant == InflationVariant::kMedoidCalipers) {
    box.center.head<2>() = medoid(segment).head<2>();
  } else {
    box.center.head<2>() = rect.center;
  }
  return box;
}

Box3D assign_label(const InstanceDetection& det, Box3D box) {
  box.label = det.label;
  box.score = det.score;
  return box;
}

}  // namespace ov3d
