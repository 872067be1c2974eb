#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ov3d/geom.hpp"

namespace ov3d {

/// Binary membership bitmap for one detection, row-major.
struct InstanceMask {
  int width{0}, height{0};
  int instance_id{1};
  std::vector<std::uint8_t> bitmap;

  InstanceMask() = default;
  InstanceMask(int w, int h, int id = 1)
      : width(w), height(h), instance_id(id), bitmap(static_cast<std::size_t>(w) * h, 0) {}

  bool contains(int col, int row) const {
    return col >= 0 && row >= 0 && col < width && row < height &&
           bitmap[static_cast<std::size_t>(row) * width + col] != 0;
  }
  void set(int col, int row, bool member = true) {
    bitmap[static_cast<std::size_t>(row) * width + col] = member ? 1 : 0;
  }
  std::size_t member_count() const;
};

/// Metric depth per pixel, row-major, 0 = invalid.
struct DepthMap {
  int width{0}, height{0};
  std::vector<float> depth;

  DepthMap() = default;
  DepthMap(int w, int h, float fill = 0.0f) : width(w), height(h), depth(static_cast<std::size_t>(w) * h, fill) {}

  float at(int col, int row) const { return depth[static_cast<std::size_t>(row) * width + col]; }
  float& at(int col, int row) { return depth[static_cast<std::size_t>(row) * width + col]; }
};

/// 3D points captured by one mask, in the camera frame.
struct LiftedSegment {
  std::string detection_ref;
  PointCloudd points;
  std::size_t pixel_count{0};
  std::size_t hit_count{0};
  /// Originating cloud column per point (LiDAR) or row-major pixel index (depth).
  std::vector<std::int64_t> source_index;
};

/// Pseudo-LiDAR stride used when the configuration does not set one.
inline constexpr int kDefaultPseudoStride = 4;

/// Points whose floored projection falls on a mask pixel. `cloud` is the
/// camera-frame cloud `map` was built from. Throws EmptySegmentError when
/// nothing is captured.
LiftedSegment lift_mask_lidar(const InstanceMask& mask, const PixelPointMapd& map, const PointCloudd& cloud,
                              std::string detection_ref = {});

/// Back-projects every `stride`-th member pixel (row-major over members) with
/// valid depth. Pixel (col,row) is back-projected at u = col, v = row.
LiftedSegment lift_mask_depth(const InstanceMask& mask, const DepthMap& depth, const CameraModeld& cam,
                              int stride = 1, std::string detection_ref = {});

/// Camera-frame cloud of every `stride`-th pixel (row-major) with valid depth.
PointCloudd depth_to_pseudocloud(const DepthMap& depth, const CameraModeld& cam, int stride);

}  // namespace ov3d
