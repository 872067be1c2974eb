#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace ov3d {

/// COCO-style uncompressed run-length mask: alternating background/foreground
/// run lengths over the column-major pixel order, starting with background.
struct RleMask {
  int height{0}, width{0};
  std::vector<std::uint32_t> counts;
};

/// One 2D open-vocabulary detection with its instance mask reference.
struct InstanceDetection {
  std::string label;
  double score{0.0};
  std::array<double, 4> box2d{};  // x1, y1, x2, y2 in pixels
  /// Instance id in the frame's 16-bit mask PNG, or an inline RLE mask.
  std::optional<int> mask_id;
  std::optional<RleMask> rle;
  /// Externally supplied heading (radians, evaluation frame).
  std::optional<double> heading_hint;

  bool valid(int image_width, int image_height) const {
    return box2d[0] < box2d[2] && box2d[1] < box2d[3] && box2d[0] >= 0 && box2d[1] >= 0 &&
           box2d[2] <= image_width && box2d[3] <= image_height && score >= 0.0 && score <= 1.0;
  }
};

}  // namespace ov3d
