#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "ov3d/eval.hpp"

namespace ov3d {

struct BevOptions {
  double meters_per_pixel{0.1};
  double range{50.0};  // half-width of the square view, meters
  /// When set, boxes are moved from the global frame into the ego frame so the
  /// ego sits at the origin. Otherwise the global origin is drawn at the center.
  std::optional<Se3Posed> ego_from_global;
};

/// Top-down SVG of one frame: ground truth in green, predictions in blue,
/// each with a heading tick from the center to the front edge. +x points
/// right and +y up. Output bytes depend only on the inputs.
std::string render_bev(std::span<const SceneBox> preds, std::span<const SceneBox> gts, const std::string& frame_id,
                       const BevOptions& opts = {});

void emit_bev(std::span<const SceneBox> preds, std::span<const SceneBox> gts, const std::string& frame_id,
              const std::filesystem::path& out, const BevOptions& opts = {});

}  // namespace ov3d
