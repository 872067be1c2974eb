#include "synthetic_scene.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "ov3d/pipeline.hpp"

namespace ov3d::synth {

namespace {


Calibration scene_calibration(const SceneSpec& spec) {
  Calibration c;
  // Camera: z forward = ego +x, x right = ego -y, y down = ego -z.
  Eigen::Matrix3d ego_from_cam;
  ego_from_cam << 0, 0, 1, -1, 0, 0, 0, -1, 0;
  c.camera_to_ego = Se3Posed(Eigen::Quaterniond(ego_from_cam), {1.5, 0.0, 1.5});
  c.lidar_to_ego = yaw_pose<double>(kPi / 2, {1.0, 0.0, 1.8});
  c.ego_to_global = yaw_pose<double>(kPi / 6, {100.0, 200.0, 0.0});
  c.camera = make_camera(spec.focal, spec.focal, spec.width / 2.0, spec.height / 2.0, spec.width, spec.height,
                         inverse(c.camera_to_ego));
  return c;
}

// Ray parameter of the first hit with an upright box, or +inf.
double ray_box(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, const PlantedBox& b) {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(-b.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  const Eigen::Vector3d c(b.center_xy.x(), b.center_xy.y(), b.size.z() / 2);
  const Eigen::Vector3d o = r * (origin - c);
  const Eigen::Vector3d d = r * dir;
  double t0 = -std::numeric_limits<double>::infinity(), t1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    const double h = b.size[k] / 2;
    if (std::abs(d[k]) < 1e-15) {
      if (std::abs(o[k]) > h) return std::numeric_limits<double>::infinity();
      continue;
    }
    double a = (-h - o[k]) / d[k], e = (h - o[k]) / d[k];
    if (a > e) std::swap(a, e);
    t0 = std::max(t0, a);
    t1 = std::min(t1, e);
  }
  if (t0 > t1 || t1 <= 0) return std::numeric_limits<double>::infinity();
  return t0 > 0 ? t0 : t1;
}

Eigen::Vector3d sample_surface(const PlantedBox& b, std::mt19937& rng) {
  const Eigen::Vector3d& s = b.size;
  const double areas[3] = {s.y() * s.z(), s.x() * s.z(), s.x() * s.y()};
  const double total = 2 * (areas[0] + areas[1] + areas[2]);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  double pick = u01(rng) * total;
  int axis = 0;
  while (axis < 2 && pick > 2 * areas[axis]) pick -= 2 * areas[axis++];
  Eigen::Vector3d local(u01(rng) - 0.5, u01(rng) - 0.5, u01(rng) - 0.5);
  local = local.cwiseProduct(s);
  local[axis] = (u01(rng) < 0.5 ? -0.5 : 0.5) * s[axis];
  const Eigen::Vector3d c(b.center_xy.x(), b.center_xy.y(), s.z() / 2);
  return Eigen::AngleAxisd(b.yaw, Eigen::Vector3d::UnitZ()) * local + c;
}

}  // namespace

SceneSpec default_scene(const std::string& frame_id, std::uint32_t seed) {
  SceneSpec s;
  s.frame_id = frame_id;
  s.seed = seed;
  s.boxes = {
      {"car", {14.0, -3.5}, {4.5, 2.0, 1.6}, 0.35, 0.92},
      {"car", {22.0, 4.0}, {4.2, 1.9, 1.5}, -0.6, 0.81},
      {"pedestrian", {9.0, 1.5}, {0.8, 0.7, 1.8}, 0.2, 0.66},
  };
  return s;
}

SceneResult write_scene(const std::filesystem::path& root, const SceneSpec& spec) {
  SceneResult res;
  res.calib = scene_calibration(spec);
  const Calibration& calib = res.calib;
  const CameraModeld& cam = calib.camera;
  std::mt19937 rng(spec.seed);

  // Ray-cast masks, depth and a shaded image.
  const Eigen::Matrix3d ego_from_cam = calib.camera_to_ego.rotation_matrix();
  const Eigen::Vector3d cam_origin = calib.camera_to_ego.translation;
  Gray16Image ids{spec.width, spec.height, std::vector<std::uint16_t>(static_cast<std::size_t>(spec.width) * spec.height, 0)};
  DepthMap depth(spec.width, spec.height);
  RgbImage image(spec.width, spec.height);
  for (int row = 0; row < spec.height; ++row) {
    for (int col = 0; col < spec.width; ++col) {
      const Eigen::Vector3d ray_cam((col - cam.cx) / cam.fx, (row - cam.cy) / cam.fy, 1.0);
      const Eigen::Vector3d dir = ego_from_cam * ray_cam;
      double best = std::numeric_limits<double>::infinity();
      int hit = 0;
      for (std::size_t k = 0; k < spec.boxes.size(); ++k) {
        const double t = ray_box(cam_origin, dir, spec.boxes[k]);
        if (t < best) {
          best = t;
          hit = static_cast<int>(k) + 1;
        }
      }
      const std::size_t i = static_cast<std::size_t>(row) * spec.width + col;
      const auto sky = static_cast<std::uint8_t>(150 + 80 * row / spec.height);
      if (hit) {
        ids.pixels[i] = static_cast<std::uint16_t>(hit);
        depth.depth[i] = static_cast<float>(best);  // ray z component is 1 in the camera frame
        const auto shade = static_cast<std::uint8_t>(40 + 40 * hit);
        image.at(col, row, 0) = shade;
        image.at(col, row, 1) = static_cast<std::uint8_t>(shade / 2);
        image.at(col, row, 2) = static_cast<std::uint8_t>(255 - shade);
      } else {
        image.at(col, row, 0) = sky;
        image.at(col, row, 1) = sky;
        image.at(col, row, 2) = 230;
      }
    }
  }

  // LiDAR: box surfaces plus uniform clutter, expressed in the sensor frame.
  std::vector<Eigen::Vector3d> ego_pts;
  std::vector<int> owner;
  for (std::size_t k = 0; k < spec.boxes.size(); ++k) {
    for (int n = 0; n < spec.points_per_box; ++n) {
      ego_pts.push_back(sample_surface(spec.boxes[k], rng));
      owner.push_back(static_cast<int>(k) + 1);
    }
  }
  std::uniform_real_distribution<double> nx(2.0, 60.0), ny(-25.0, 25.0), nz(0.0, 3.0);
  for (int n = 0; n < spec.noise_points; ++n) {
    ego_pts.emplace_back(nx(rng), ny(rng), nz(rng));
    owner.push_back(0);
  }

  // Grow each mask by the pixels its own (unoccluded) surface points land on.
  for (std::size_t p = 0; p < ego_pts.size(); ++p) {
    if (!owner[p]) continue;
    const Eigen::Vector3d pc = cam.sensor_from_reference * ego_pts[p];
    if (pc.z() <= kMinCameraDepth) continue;
    const double u = cam.fx * pc.x() / pc.z() + cam.cx, v = cam.fy * pc.y() / pc.z() + cam.cy;
    if (!cam.in_bounds(u, v)) continue;
    const std::size_t i = static_cast<std::size_t>(std::floor(v)) * spec.width + static_cast<std::size_t>(std::floor(u));
    if (ids.pixels[i] == 0) ids.pixels[i] = static_cast<std::uint16_t>(owner[p]);
  }

  PointCloudd sweep(Points3<double>(3, static_cast<Eigen::Index>(ego_pts.size())), Frame::kSensor);
  const Se3Posed sensor_from_ego = inverse(calib.lidar_to_ego);
  for (std::size_t p = 0; p < ego_pts.size(); ++p) sweep.positions.col(static_cast<Eigen::Index>(p)) = sensor_from_ego * ego_pts[p];
  sweep.intensity = Eigen::VectorXd::Constant(sweep.size(), 10.0);
  sweep.ring = Eigen::VectorXd::Zero(sweep.size());

  const std::string f = spec.frame_id;
  write_text(root / "calib" / (f + ".json"), calibration_to_json(calib).dump(2) + "\n");
  if (spec.write_lidar) write_lidar_bin(root / "lidar" / (f + ".bin"), sweep);
  if (spec.write_depth) write_depth_png(root / "depth" / (f + ".png"), depth);
  write_rgb_png(root / "images" / (f + ".png"), image);
  write_gray16_png(root / "masks" / (f + ".png"), ids);

  const double ego_yaw = yaw_of(calib.ego_to_global);
  for (const PlantedBox& b : spec.boxes) {
    SceneBox g;
    g.frame_id = f;
    g.box.label = b.label;
    g.box.score = 1.0;
    g.box.center = calib.ego_to_global * Eigen::Vector3d(b.center_xy.x(), b.center_xy.y(), b.size.z() / 2);
    g.box.size = b.size;
    g.box.yaw = normalize_angle(b.yaw + ego_yaw);
    g.box.velocity.setZero();
    res.gt.push_back(g);
  }
  return res;
}

void write_dataset(const std::filesystem::path& root, const std::vector<SceneSpec>& specs) {
  std::vector<FrameBundle> frames;
  std::vector<SceneBox> gt;
  for (const SceneSpec& spec : specs) {
    const SceneResult r = write_scene(root, spec);
    gt.insert(gt.end(), r.gt.begin(), r.gt.end());
    FrameBundle b;
    b.frame_id = spec.frame_id;
    b.camera = "CAM_FRONT";
    b.calibration_path = std::filesystem::path("calib") / (spec.frame_id + ".json");
    b.calib = r.calib;
    b.image = std::filesystem::path("images") / (spec.frame_id + ".png");
    if (spec.write_depth) b.depth = std::filesystem::path("depth") / (spec.frame_id + ".png");
    if (spec.write_lidar) b.lidar = std::filesystem::path("lidar") / (spec.frame_id + ".bin");
    b.masks = std::filesystem::path("masks") / (spec.frame_id + ".png");
    const Gray16Image ids = read_gray16_png(root / *b.masks);
    for (std::size_t k = 0; k < spec.boxes.size(); ++k) {
      const InstanceMask m = mask_from_id_map(ids, static_cast<int>(k) + 1);
      int x1 = spec.width, y1 = spec.height, x2 = -1, y2 = -1;
      for (int row = 0; row < m.height; ++row)
        for (int col = 0; col < m.width; ++col)
          if (m.contains(col, row)) {
            x1 = std::min(x1, col);
            y1 = std::min(y1, row);
            x2 = std::max(x2, col + 1);
            y2 = std::max(y2, row + 1);
          }
      if (x2 < 0) continue;  // fully occluded or out of view
      InstanceDetection d;
      d.label = spec.boxes[k].label;
      d.score = spec.boxes[k].score;
      d.box2d = {double(x1), double(y1), double(x2), double(y2)};
      d.mask_id = static_cast<int>(k) + 1;
      b.detections.push_back(d);
    }
    frames.push_back(std::move(b));
  }
  write_text(root / kFramesFile, frames_to_json(frames).dump(2) + "\n");
  write_boxes(root / "gt.json", gt);
}

}  // namespace ov3d::synth
