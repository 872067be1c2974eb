#include "ov3d/lift.hpp"

#include <algorithm>
#include <cmath>

namespace ov3d {

std::size_t InstanceMask::member_count() const {
  return static_cast<std::size_t>(std::count_if(bitmap.begin(), bitmap.end(), [](std::uint8_t b) { return b != 0; }));
}

LiftedSegment lift_mask_lidar(const InstanceMask& mask, const PixelPointMapd& map, const PointCloudd& cloud,
                              std::string detection_ref) {
  if (map.width != mask.width || map.height != mask.height) {
    throw DimensionMismatchError("lift_mask_lidar: mask and camera dimensions differ");
  }
  std::vector<std::int64_t> hits;
  for (Eigen::Index k = 0; k < map.size(); ++k) {
    const int col = static_cast<int>(std::floor(map.pixel_uv(0, k)));
    const int row = static_cast<int>(std::floor(map.pixel_uv(1, k)));
    if (mask.contains(col, row)) hits.push_back(map.source_index[static_cast<std::size_t>(k)]);
  }
  if (hits.empty()) throw EmptySegmentError("mask captured no LiDAR points");
  std::sort(hits.begin(), hits.end());

  LiftedSegment seg;
  seg.detection_ref = std::move(detection_ref);
  seg.points = select(cloud, hits);
  seg.points.frame = Frame::kCamera;
  seg.pixel_count = mask.member_count();
  seg.hit_count = hits.size();
  seg.source_index = std::move(hits);
  return seg;
}

LiftedSegment lift_mask_depth(const InstanceMask& mask, const DepthMap& depth, const CameraModeld& cam, int stride,
                              std::string detection_ref) {
  if (mask.width != depth.width || mask.height != depth.height) {
    throw DimensionMismatchError("lift_mask_depth: mask and depth map dimensions differ");
  }
  if (stride < 1) throw ConfigError("stride must be >= 1");

  std::vector<Vec3<double>> pts;
  std::vector<std::int64_t> src;
  std::size_t members = 0;
  for (int row = 0; row < mask.height; ++row) {
    for (int col = 0; col < mask.width; ++col) {
      if (!mask.contains(col, row)) continue;
      const std::size_t ordinal = members++;
      if (ordinal % static_cast<std::size_t>(stride) != 0) continue;
      const double d = depth.at(col, row);
      if (!(d > 0.0) || !std::isfinite(d)) continue;
      pts.push_back(backproject_pixel(cam, double(col), double(row), d));
      src.push_back(static_cast<std::int64_t>(row) * mask.width + col);
    }
  }
  if (pts.empty()) throw EmptySegmentError("mask has no valid-depth pixels");

  LiftedSegment seg;
  seg.detection_ref = std::move(detection_ref);
  seg.points = PointCloudd(Points3<double>(3, static_cast<Eigen::Index>(pts.size())), Frame::kCamera);
  for (std::size_t i = 0; i < pts.size(); ++i) seg.points.positions.col(static_cast<Eigen::Index>(i)) = pts[i];
  seg.pixel_count = members;
  seg.hit_count = pts.size();
  seg.source_index = std::move(src);
  return seg;
}

PointCloudd depth_to_pseudocloud(const DepthMap& depth, const CameraModeld& cam, int stride) {
  if (stride < 1) throw ConfigError("stride must be >= 1");
  std::vector<Vec3<double>> pts;
  const std::size_t total = static_cast<std::size_t>(depth.width) * depth.height;
  for (std::size_t idx = 0; idx < total; idx += static_cast<std::size_t>(stride)) {
    const double d = depth.depth[idx];
    if (!(d > 0.0) || !std::isfinite(d)) continue;
    const int col = static_cast<int>(idx % static_cast<std::size_t>(depth.width));
    const int row = static_cast<int>(idx / static_cast<std::size_t>(depth.width));
    pts.push_back(backproject_pixel(cam, double(col), double(row), d));
  }
  PointCloudd cloud(Points3<double>(3, static_cast<Eigen::Index>(pts.size())), Frame::kCamera);
  for (std::size_t i = 0; i < pts.size(); ++i) cloud.positions.col(static_cast<Eigen::Index>(i)) = pts[i];
  return cloud;
}

}  // namespace ov3d
