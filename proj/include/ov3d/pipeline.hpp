#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ov3d/box.hpp"
#include "ov3d/cluster.hpp"
#include "ov3d/eval.hpp"
#include "ov3d/fog.hpp"
#include "ov3d/io.hpp"

namespace ov3d {

enum class PointSource { kLidar, kDepth };

struct PipelineConfig {
  InflationStrategy strategy;
  PointSource source{PointSource::kLidar};
  bool dbscan_enabled{true};
  DbscanParams dbscan;
  std::map<std::string, DbscanParams> dbscan_per_class;
  int stride{kDefaultPseudoStride};
  FogParams fog;
  MatchConfig eval;
  std::vector<std::string> classes;
  std::optional<fs::path> shape_priors_path;
  int workers{0};  // 0 = hardware concurrency

  const DbscanParams& dbscan_for(const std::string& label) const;
  /// Throws ConfigError on inconsistent settings.
  void validate() const;
};

/// Keys are rejected unless known. Relative shape-prior paths resolve against `base_dir`.
PipelineConfig parse_config(const nlohmann::json& j, const fs::path& base_dir = {});
PipelineConfig read_config(const fs::path& path);
ShapePriorTable parse_shape_priors(const nlohmann::json& j, const std::string& context = "<shape priors>");
ShapePriorTable read_shape_priors(const fs::path& path);

/// One camera image of one frame with everything needed to lift its
/// detections. Paths are relative to the dataset root.
struct FrameBundle {
  std::string frame_id;
  std::string camera;
  fs::path calibration_path;
  Calibration calib;
  fs::path image;
  std::optional<fs::path> depth;
  std::optional<fs::path> lidar;
  Frame lidar_frame{Frame::kSensor};  // kSensor or kCamera (pseudo-LiDAR)
  std::optional<fs::path> masks;
  std::vector<InstanceDetection> detections;

  Se3Posed ego_from_global() const { return inverse(calib.ego_to_global); }
};

inline constexpr const char* kFramesFile = "frames.json";

/// Reads `<root>/frames.json` and every calibration it references.
std::vector<FrameBundle> read_frames(const fs::path& root);
nlohmann::ordered_json frames_to_json(const std::vector<FrameBundle>& frames);

struct DropRecord {
  std::string frame_id;
  std::string camera;
  std::size_t detection_index{0};
  std::string reason;
};

struct InflateResult {
  std::vector<SceneBox> predictions;  // sorted by frame id, then bundle and detection order
  std::vector<DropRecord> drops;
};

/// Boxes for one bundle in the global frame. Per-detection geometric failures
/// (empty segment, all noise) are recorded in `drops`.
std::vector<SceneBox> inflate_frame(const PipelineConfig& cfg, const fs::path& root, const FrameBundle& bundle,
                                    std::vector<DropRecord>& drops);

InflateResult run_inflate(const PipelineConfig& cfg, const fs::path& root);

MetricsReport run_eval(const fs::path& pred_path, const fs::path& gt_path, const MatchConfig& cfg,
                       const std::vector<std::string>& classes);

struct DatasetBuildLog {
  std::size_t written{0};
  std::vector<std::string> skipped;  // one line per skipped frame
};

/// Fogs every image that has a depth map; output mirrors the input paths.
DatasetBuildLog fog_dataset(const fs::path& in_root, const fs::path& out_root, const FogParams& fog);

/// RGB-D copy of a dataset: fogged images, camera-frame pseudo-LiDAR sweeps
/// under `pseudo_lidar/`, copied calibration/depth/mask files and a
/// frames.json pointing at the pseudo sweeps. Frames without depth are skipped.
DatasetBuildLog build_pseudo_dataset(const fs::path& in_root, const fs::path& out_root, const FogParams& fog,
                                     int stride);

}  // namespace ov3d
