#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ov3d/eval.hpp"
#include "ov3d/io.hpp"

namespace ov3d::synth {

/// A box standing on the ego ground plane (z = 0 at the box bottom).
struct PlantedBox {
  std::string label;
  Eigen::Vector2d center_xy;  // ego frame
  Eigen::Vector3d size;       // length, width, height
  double yaw{0.0};            // ego frame
  double score{0.9};
};

struct SceneSpec {
  std::string frame_id{"frame-000"};
  int width{640}, height{360};
  double focal{400.0};
  std::vector<PlantedBox> boxes;
  int points_per_box{800};
  int noise_points{300};
  std::uint32_t seed{7};
  bool write_depth{true};
  bool write_lidar{true};
};

/// Default scene: two cars and a pedestrian in front of the camera.
SceneSpec default_scene(const std::string& frame_id = "frame-000", std::uint32_t seed = 7);

struct SceneResult {
  Calibration calib;
  std::vector<SceneBox> gt;  // global frame
};

/// Writes one frame (calibration, LiDAR sweep, depth PNG, image, instance-id
/// mask) under `root/<kind>/<frame_id>.*` and returns its ground truth.
/// LiDAR points are sampled on every box face; noise is uniform in front of
/// the ego vehicle. Masks and depth come from ray casting through pixel
/// corners, with box-point pixels added to each mask.
SceneResult write_scene(const std::filesystem::path& root, const SceneSpec& spec);

/// Writes `root/frames.json` for scenes written with write_scene, plus
/// `root/gt.json` with their combined ground truth.
void write_dataset(const std::filesystem::path& root, const std::vector<SceneSpec>& specs);

}  // namespace ov3d::synth
