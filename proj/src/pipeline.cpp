#include "ov3d/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <set>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ov3d {

namespace {

using json = nlohmann::json;

void reject_unknown(const json& j, std::initializer_list<const char*> known, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, _] : j.items()) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return key == k; })) {
      throw ConfigError(context + ": unknown key '" + key + "'");
    }
  }
}

template <typename T>
T value_as(const json& j, const std::string& context) {
  try {
    return j.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(context + ": " + e.what());
  }
}

DbscanParams parse_dbscan_params(const json& j, DbscanParams base, const std::string& context) {
  reject_unknown(j, {"eps", "min_pts"}, context);
  if (j.contains("eps")) base.eps = value_as<double>(j["eps"], context + ".eps");
  if (j.contains("min_pts")) base.min_pts = value_as<int>(j["min_pts"], context + ".min_pts");
  base.validate();
  return base;
}

fs::path relative_or_name(const fs::path& p) { return p.is_absolute() ? p.filename() : p; }

void copy_into(const fs::path& in_root, const fs::path& out_root, const fs::path& rel) {
  const fs::path dst = out_root / relative_or_name(rel);
  if (dst.has_parent_path()) fs::create_directories(dst.parent_path());
  write_text(dst, [&] {
    const auto bytes = read_bytes(rel.is_absolute() ? rel : in_root / rel);
    return std::string(bytes.begin(), bytes.end());
  }());
}

InstanceDetection parse_detection(const json& j, const std::string& context) {
  reject_unknown(j, {"label", "score", "box2d", "mask_id", "rle", "heading_hint"}, context);
  InstanceDetection d;
  try {
    d.label = j.at("label").get<std::string>();
    d.score = j.at("score").get<double>();
    const auto b = j.at("box2d").get<std::vector<double>>();
    if (b.size() != 4) throw ParseError(context + ": box2d must be [x1, y1, x2, y2]");
    std::copy(b.begin(), b.end(), d.box2d.begin());
    if (j.contains("mask_id")) d.mask_id = j["mask_id"].get<int>();
    if (j.contains("rle")) {
      const json& r = j["rle"];
      const auto size = r.at("size").get<std::vector<int>>();
      if (size.size() != 2) throw ParseError(context + ": rle.size must be [height, width]");
      d.rle = RleMask{size[0], size[1], r.at("counts").get<std::vector<std::uint32_t>>()};
    }
    if (j.contains("heading_hint") && !j["heading_hint"].is_null()) d.heading_hint = j["heading_hint"].get<double>();
  } catch (const json::exception& e) {
    throw ParseError(context + ": " + e.what());
  }
  if (d.mask_id.has_value() == d.rle.has_value()) {
    throw ParseError(context + ": exactly one of mask_id or rle is required");
  }
  return d;
}

nlohmann::ordered_json detection_to_json(const InstanceDetection& d) {
  nlohmann::ordered_json j;
  j["label"] = d.label;
  j["score"] = d.score;
  j["box2d"] = d.box2d;
  if (d.mask_id) j["mask_id"] = *d.mask_id;
  if (d.rle) j["rle"] = {{"size", {d.rle->height, d.rle->width}}, {"counts", d.rle->counts}};
  if (d.heading_hint) j["heading_hint"] = *d.heading_hint;
  return j;
}

}  // namespace

// --- Configuration ----------------------------------------------------------

const DbscanParams& PipelineConfig::dbscan_for(const std::string& label) const {
  const auto it = dbscan_per_class.find(label);
  return it == dbscan_per_class.end() ? dbscan : it->second;
}

void PipelineConfig::validate() const {
  dbscan.validate();
  for (const auto& [_, p] : dbscan_per_class) p.validate();
  if (stride < 1) throw ConfigError("stride must be >= 1");
  if (!(fog.beta >= 0.0)) throw ConfigError("fog beta must be >= 0");
  if (workers < 0) throw ConfigError("workers must be >= 0");
  eval.validate();
  if (strategy.variant == InflationVariant::kMedoidPrior) {
    if (strategy.priors.empty()) throw ConfigError("medoid_prior requires a shape_priors table");
    for (const auto& c : classes) {
      if (!strategy.priors.count(c)) throw ConfigError("shape prior table has no entry for class '" + c + "'");
    }
  }
}

PipelineConfig parse_config(const json& j, const fs::path& base_dir) {
  reject_unknown(j, {"strategy", "source", "dbscan", "stride", "fog", "eval", "classes", "shape_priors", "workers"},
                 "config");
  PipelineConfig cfg;
  if (j.contains("strategy")) cfg.strategy.variant = parse_variant(value_as<std::string>(j["strategy"], "strategy"));
  if (j.contains("source")) {
    const auto s = value_as<std::string>(j["source"], "source");
    if (s == "lidar") {
      cfg.source = PointSource::kLidar;
    } else if (s == "depth") {
      cfg.source = PointSource::kDepth;
    } else {
      throw ConfigError("source must be 'lidar' or 'depth'");
    }
  }
  if (j.contains("dbscan")) {
    const json& d = j["dbscan"];
    reject_unknown(d, {"enabled", "eps", "min_pts", "per_class"}, "config.dbscan");
    if (d.contains("enabled")) cfg.dbscan_enabled = value_as<bool>(d["enabled"], "dbscan.enabled");
    json base = json::object();
    if (d.contains("eps")) base["eps"] = d["eps"];
    if (d.contains("min_pts")) base["min_pts"] = d["min_pts"];
    cfg.dbscan = parse_dbscan_params(base, cfg.dbscan, "config.dbscan");
    if (d.contains("per_class")) {
      for (const auto& [label, p] : d["per_class"].items()) {
        cfg.dbscan_per_class[label] = parse_dbscan_params(p, cfg.dbscan, "config.dbscan.per_class." + label);
      }
    }
  }
  if (j.contains("stride")) cfg.stride = value_as<int>(j["stride"], "stride");
  if (j.contains("fog")) {
    const json& f = j["fog"];
    reject_unknown(f, {"beta", "ambient"}, "config.fog");
    if (f.contains("beta")) cfg.fog.beta = value_as<double>(f["beta"], "fog.beta");
    if (f.contains("ambient")) cfg.fog.ambient = value_as<std::array<double, 3>>(f["ambient"], "fog.ambient");
  }
  if (j.contains("eval")) {
    const json& e = j["eval"];
    reject_unknown(e, {"dist_thresholds", "tp_threshold", "min_recall", "min_precision", "half_period_classes"},
                   "config.eval");
    if (e.contains("dist_thresholds")) {
      cfg.eval.dist_thresholds = value_as<std::vector<double>>(e["dist_thresholds"], "eval.dist_thresholds");
    }
    if (e.contains("tp_threshold")) cfg.eval.tp_threshold = value_as<double>(e["tp_threshold"], "eval.tp_threshold");
    if (e.contains("min_recall")) cfg.eval.min_recall = value_as<double>(e["min_recall"], "eval.min_recall");
    if (e.contains("min_precision")) {
      cfg.eval.min_precision = value_as<double>(e["min_precision"], "eval.min_precision");
    }
    if (e.contains("half_period_classes")) {
      cfg.eval.half_period_classes =
          value_as<std::set<std::string>>(e["half_period_classes"], "eval.half_period_classes");
    }
  }
  if (j.contains("classes")) cfg.classes = value_as<std::vector<std::string>>(j["classes"], "classes");
  if (j.contains("workers")) cfg.workers = value_as<int>(j["workers"], "workers");
  if (j.contains("shape_priors")) {
    fs::path p = value_as<std::string>(j["shape_priors"], "shape_priors");
    if (p.is_relative()) p = base_dir / p;
    cfg.shape_priors_path = p;
    cfg.strategy.priors = read_shape_priors(p);
  }
  cfg.validate();
  return cfg;
}

PipelineConfig read_config(const fs::path& path) {
  try {
    return parse_config(read_json(path), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

ShapePriorTable parse_shape_priors(const json& j, const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object mapping class -> [l, w, h]");
  ShapePriorTable t;
  for (const auto& [label, v] : j.items()) {
    const auto s = value_as<std::vector<double>>(v, context + "." + label);
    if (s.size() != 3 || !(s[0] > 0 && s[1] > 0 && s[2] > 0)) {
      throw ConfigError(context + "." + label + ": prior size must be three positive numbers");
    }
    t[label] = Eigen::Vector3d(s[0], s[1], s[2]);
  }
  return t;
}

ShapePriorTable read_shape_priors(const fs::path& path) { return parse_shape_priors(read_json(path), path.string()); }

// --- Frame bundles ----------------------------------------------------------

std::vector<FrameBundle> read_frames(const fs::path& root) {
  const fs::path file = root / kFramesFile;
  const json doc = read_json(file);
  const std::string ctx = file.string();
  if (!doc.is_object() || !doc.contains("frames") || !doc["frames"].is_array()) {
    throw ParseError(ctx + ": expected {\"frames\": [...]}");
  }
  std::vector<FrameBundle> out;
  for (std::size_t i = 0; i < doc["frames"].size(); ++i) {
    const json& f = doc["frames"][i];
    const std::string where = fmt::format("{}: frames[{}]", ctx, i);
    try {
      reject_unknown(f, {"frame_id", "camera", "calibration", "image", "depth", "lidar", "lidar_frame", "masks",
                         "detections"},
                     where);
    } catch (const ConfigError& e) {
      throw ParseError(e.what());
    }
    FrameBundle b;
    try {
      b.frame_id = f.at("frame_id").get<std::string>();
      b.camera = f.value("camera", std::string("CAM_FRONT"));
      b.calibration_path = f.at("calibration").get<std::string>();
      b.image = f.at("image").get<std::string>();
      if (f.contains("depth")) b.depth = fs::path(f["depth"].get<std::string>());
      if (f.contains("lidar")) b.lidar = fs::path(f["lidar"].get<std::string>());
      if (f.contains("masks")) b.masks = fs::path(f["masks"].get<std::string>());
      if (f.contains("lidar_frame")) {
        const auto lf = f["lidar_frame"].get<std::string>();
        if (lf == "sensor") {
          b.lidar_frame = Frame::kSensor;
        } else if (lf == "camera") {
          b.lidar_frame = Frame::kCamera;
        } else {
          throw ParseError(where + ": lidar_frame must be 'sensor' or 'camera'");
        }
      }
    } catch (const json::exception& e) {
      throw ParseError(where + ": " + e.what());
    }
    if (!b.depth && !b.lidar) throw ParseError(where + ": needs a lidar or depth path");
    const fs::path calib = b.calibration_path.is_absolute() ? b.calibration_path : root / b.calibration_path;
    b.calib = read_calibration(calib);
    if (f.contains("detections")) {
      for (std::size_t k = 0; k < f["detections"].size(); ++k) {
        const std::string dwhere = fmt::format("{}.detections[{}]", where, k);
        InstanceDetection d = parse_detection(f["detections"][k], dwhere);
        if (!d.valid(b.calib.camera.width, b.calib.camera.height)) {
          throw ParseError(dwhere + ": box2d must satisfy x1 < x2, y1 < y2 inside the image and score in [0, 1]");
        }
        if (d.mask_id && !b.masks) throw ParseError(dwhere + ": mask_id given but the frame has no masks file");
        b.detections.push_back(std::move(d));
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

nlohmann::ordered_json frames_to_json(const std::vector<FrameBundle>& frames) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const FrameBundle& b : frames) {
    nlohmann::ordered_json f;
    f["frame_id"] = b.frame_id;
    f["camera"] = b.camera;
    f["calibration"] = b.calibration_path.generic_string();
    f["image"] = b.image.generic_string();
    if (b.depth) f["depth"] = b.depth->generic_string();
    if (b.lidar) {
      f["lidar"] = b.lidar->generic_string();
      f["lidar_frame"] = b.lidar_frame == Frame::kCamera ? "camera" : "sensor";
    }
    if (b.masks) f["masks"] = b.masks->generic_string();
    f["detections"] = nlohmann::ordered_json::array();
    for (const auto& d : b.detections) f["detections"].push_back(detection_to_json(d));
    arr.push_back(std::move(f));
  }
  nlohmann::ordered_json doc;
  doc["frames"] = std::move(arr);
  return doc;
}

// --- Inflation --------------------------------------------------------------

std::vector<SceneBox> inflate_frame(const PipelineConfig& cfg, const fs::path& root, const FrameBundle& bundle,
                                    std::vector<DropRecord>& drops) {
  const auto resolve = [&root](const fs::path& p) { return p.is_absolute() ? p : root / p; };
  const CameraModeld& cam = bundle.calib.camera;
  const Se3Posed camera_to_global = bundle.calib.camera_to_global();

  std::vector<SceneBox> out;
  if (bundle.detections.empty()) return out;

  PointCloudd cloud_cam;
  PixelPointMapd map;
  DepthMap depth;
  if (cfg.source == PointSource::kLidar) {
    if (!bundle.lidar) throw ParseError(bundle.frame_id + ": config source is lidar but the frame has no lidar file");
    const PointCloudd sweep = read_lidar_bin(resolve(*bundle.lidar));
    cloud_cam = bundle.lidar_frame == Frame::kCamera
                    ? sweep
                    : transform_cloud(compose(cam.sensor_from_reference, bundle.calib.lidar_to_ego), sweep,
                                      Frame::kCamera);
    cloud_cam.frame = Frame::kCamera;
    map = project_cloud(cam, cloud_cam);
  } else {
    if (!bundle.depth) throw ParseError(bundle.frame_id + ": config source is depth but the frame has no depth file");
    depth = read_depth(resolve(*bundle.depth));
    if (depth.width != cam.width || depth.height != cam.height) {
      throw DimensionMismatchError(bundle.depth->string() + ": depth map size differs from the camera image size");
    }
  }

  std::optional<Gray16Image> ids;
  if (bundle.masks) ids = read_gray16_png(resolve(*bundle.masks));
  if (ids && (ids->width != cam.width || ids->height != cam.height)) {
    throw DimensionMismatchError(bundle.masks->string() + ": mask size differs from the camera image size");
  }

  for (std::size_t k = 0; k < bundle.detections.size(); ++k) {
    const InstanceDetection& det = bundle.detections[k];
    const InstanceMask mask = det.rle ? decode_rle(*det.rle, static_cast<int>(k) + 1) : mask_from_id_map(*ids, *det.mask_id);
    if (mask.width != cam.width || mask.height != cam.height) {
      throw DimensionMismatchError(fmt::format("{}: detection {} mask size differs from the image", bundle.frame_id, k));
    }
    const std::string ref = fmt::format("{}/{}/{}", bundle.frame_id, bundle.camera, k);
    try {
      const LiftedSegment seg = cfg.source == PointSource::kLidar
                                    ? lift_mask_lidar(mask, map, cloud_cam, ref)
                                    : lift_mask_depth(mask, depth, cam, cfg.stride, ref);
      PointCloudd pts = transform_cloud(camera_to_global, seg.points, Frame::kGlobal);
      if (cfg.dbscan_enabled) {
        const ClusterLabeling labels = dbscan(pts, cfg.dbscan_for(det.label));
        pts = densest_cluster(pts, labels);
      }
      Box3D box = inflate(pts, cfg.strategy, det.label, det.score, det.heading_hint);
      out.push_back({bundle.frame_id, assign_label(det, std::move(box)), std::nullopt, static_cast<int>(pts.size())});
    } catch (const EmptySegmentError& e) {
      drops.push_back({bundle.frame_id, bundle.camera, k, e.what()});
    } catch (const AllNoiseError& e) {
      drops.push_back({bundle.frame_id, bundle.camera, k, e.what()});
    }
  }
  return out;
}

InflateResult run_inflate(const PipelineConfig& cfg, const fs::path& root) {
  cfg.validate();
  const std::vector<FrameBundle> frames = read_frames(root);
  const std::size_t n = frames.size();
  std::vector<std::vector<SceneBox>> boxes(n);
  std::vector<std::vector<DropRecord>> drops(n);
  std::vector<std::exception_ptr> errors(n);

  std::atomic<std::size_t> next{0};
  const auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        boxes[i] = inflate_frame(cfg, root, frames[i], drops[i]);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(n, cfg.workers > 0 ? static_cast<std::size_t>(cfg.workers) : hw);
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  // Stable order: frame id, then bundle order, then detection order.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return frames[a].frame_id < frames[b].frame_id; });
  InflateResult result;
  for (const std::size_t i : order) {
    result.predictions.insert(result.predictions.end(), boxes[i].begin(), boxes[i].end());
    for (const auto& d : drops[i]) {
      spdlog::info("frame {} camera {}: dropped detection {} ({})", d.frame_id, d.camera, d.detection_index, d.reason);
      result.drops.push_back(d);
    }
  }
  return result;
}

MetricsReport run_eval(const fs::path& pred_path, const fs::path& gt_path, const MatchConfig& cfg,
                       const std::vector<std::string>& classes) {
  const std::vector<SceneBox> preds = read_boxes(pred_path);
  const std::vector<SceneBox> gts = read_boxes(gt_path);
  return evaluate(preds, gts, classes, cfg);
}

// --- Dataset builders -------------------------------------------------------

DatasetBuildLog fog_dataset(const fs::path& in_root, const fs::path& out_root, const FogParams& fog) {
  DatasetBuildLog log;
  for (const FrameBundle& b : read_frames(in_root)) {
    if (!b.depth) {
      log.skipped.push_back(fmt::format("{} {}: no depth map, skipped", b.frame_id, b.camera));
      continue;
    }
    const RgbImage img = read_rgb_png(b.image.is_absolute() ? b.image : in_root / b.image);
    const DepthMap depth = read_depth(b.depth->is_absolute() ? *b.depth : in_root / *b.depth);
    write_rgb_png(out_root / relative_or_name(b.image), apply_fog(img, depth, fog));
    ++log.written;
  }
  for (const auto& s : log.skipped) spdlog::warn("{}", s);
  return log;
}

DatasetBuildLog build_pseudo_dataset(const fs::path& in_root, const fs::path& out_root, const FogParams& fog,
                                     int stride) {
  if (stride < 1) throw ConfigError("stride must be >= 1");
  DatasetBuildLog log;
  std::vector<FrameBundle> kept;
  for (FrameBundle b : read_frames(in_root)) {
    if (!b.depth) {
      log.skipped.push_back(fmt::format("{} {}: no depth map, skipped", b.frame_id, b.camera));
      continue;
    }
    const auto in = [&in_root](const fs::path& p) { return p.is_absolute() ? p : in_root / p; };
    const RgbImage img = read_rgb_png(in(b.image));
    const DepthMap depth = read_depth(in(*b.depth));
    b.image = relative_or_name(b.image);
    write_rgb_png(out_root / b.image, apply_fog(img, depth, fog));

    const fs::path cloud_rel = fs::path("pseudo_lidar") / (b.frame_id + "_" + b.camera + ".bin");
    write_lidar_bin(out_root / cloud_rel, depth_to_pseudocloud(depth, b.calib.camera, stride));

    copy_into(in_root, out_root, b.calibration_path);
    copy_into(in_root, out_root, *b.depth);
    b.calibration_path = relative_or_name(b.calibration_path);
    b.depth = relative_or_name(*b.depth);
    if (b.masks) {
      copy_into(in_root, out_root, *b.masks);
      b.masks = relative_or_name(*b.masks);
    }
    b.lidar = cloud_rel;
    b.lidar_frame = Frame::kCamera;
    kept.push_back(std::move(b));
    ++log.written;
  }
  write_text(out_root / kFramesFile, frames_to_json(kept).dump(2) + "\n");
  for (const auto& s : log.skipped) spdlog::warn("{}", s);
  return log;
}

}  // namespace ov3d
