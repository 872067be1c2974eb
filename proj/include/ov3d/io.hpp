#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ov3d/detection.hpp"
#include "ov3d/eval.hpp"
#include "ov3d/fog.hpp"
#include "ov3d/geom.hpp"
#include "ov3d/lift.hpp"

namespace ov3d {

namespace fs = std::filesystem;

// --- LiDAR sweeps -----------------------------------------------------------

/// nuScenes sweep layout: consecutive little-endian float32 (x, y, z, intensity, ring).
inline constexpr std::size_t kLidarRecordBytes = 20;

PointCloudd read_lidar_bin(const fs::path& path);
PointCloudd parse_lidar_bin(std::span<const std::uint8_t> bytes, const std::string& context = "<memory>");
/// Missing intensity/ring are written as zero.
void write_lidar_bin(const fs::path& path, const PointCloudd& cloud);

// --- Calibration ------------------------------------------------------------

struct Calibration {
  CameraModeld camera;  // sensor_from_reference = ego -> camera
  Se3Posed camera_to_ego;
  Se3Posed lidar_to_ego;
  Se3Posed ego_to_global;

  Se3Posed camera_to_global() const { return compose(ego_to_global, camera_to_ego); }
};

Se3Posed parse_pose(const nlohmann::json& j, const std::string& context);
nlohmann::ordered_json pose_to_json(const Se3Posed& pose);
Calibration parse_calibration(const nlohmann::json& j, const std::string& context = "<calibration>");
Calibration read_calibration(const fs::path& path);
nlohmann::ordered_json calibration_to_json(const Calibration& calib);

// --- Images -----------------------------------------------------------------

struct Gray16Image {
  int width{0}, height{0};
  std::vector<std::uint16_t> pixels;
};

RgbImage read_rgb_png(const fs::path& path);
void write_rgb_png(const fs::path& path, const RgbImage& img);
Gray16Image read_gray16_png(const fs::path& path);
void write_gray16_png(const fs::path& path, const Gray16Image& img);

/// Raw float depth: 16-byte header ("OVDP", uint32 width, uint32 height,
/// uint32 reserved) followed by width*height little-endian float32 meters.
inline constexpr char kRawDepthMagic[4] = {'O', 'V', 'D', 'P'};

/// `.png` files are 16-bit millimeters (0 = invalid); anything else is raw float.
DepthMap read_depth(const fs::path& path);
void write_depth_png(const fs::path& path, const DepthMap& depth);
void write_depth_raw(const fs::path& path, const DepthMap& depth);

// --- Masks ------------------------------------------------------------------

InstanceMask mask_from_id_map(const Gray16Image& ids, int instance_id);
InstanceMask decode_rle(const RleMask& rle, int instance_id = 1);
RleMask encode_rle(const InstanceMask& mask);

// --- Boxes ------------------------------------------------------------------

/// Array of {frame_id, label, score, center, size, yaw, velocity, attribute?, num_pts?}.
std::vector<SceneBox> parse_boxes(const nlohmann::json& j, const std::string& context = "<boxes>");
std::vector<SceneBox> read_boxes(const fs::path& path);
nlohmann::ordered_json boxes_to_json(std::span<const SceneBox> boxes);
void write_boxes(const fs::path& path, std::span<const SceneBox> boxes);

// --- Misc -------------------------------------------------------------------

nlohmann::json read_json(const fs::path& path);
std::vector<std::uint8_t> read_bytes(const fs::path& path);
/// Writes `text` and creates parent directories as needed.
void write_text(const fs::path& path, const std::string& text);

}  // namespace ov3d
