#include "ov3d/io.hpp"

#include <png.h>

#include <bit>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace ov3d {

namespace {

using json = nlohmann::json;

std::uint32_t load_u32_le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(std::uint32_t v, std::vector<std::uint8_t>& out) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>((v >> (8 * k)) & 0xffu));
}

float load_f32_le(const std::uint8_t* p) { return std::bit_cast<float>(load_u32_le(p)); }
void store_f32_le(float v, std::vector<std::uint8_t>& out) { store_u32_le(std::bit_cast<std::uint32_t>(v), out); }

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path.string() + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error("failed writing '" + path.string() + "'");
}

template <typename T>
T get_field(const json& j, const char* key, const std::string& context) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(context + ": missing field '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(context + ": field '" + key + "' has the wrong type (" + e.what() + ")");
  }
}

Eigen::Vector3d get_vec3(const json& j, const char* key, const std::string& context) {
  const auto v = get_field<std::vector<double>>(j, key, context);
  if (v.size() != 3) throw ParseError(context + ": field '" + key + "' must have 3 entries");
  return {v[0], v[1], v[2]};
}

// --- libpng plumbing. Objects with destructors live outside the setjmp frames.

struct PngFile {
  std::FILE* fp{nullptr};
  explicit PngFile(const fs::path& path, const char* mode) : fp(std::fopen(path.c_str(), mode)) {}
  ~PngFile() {
    if (fp) std::fclose(fp);
  }
  PngFile(const PngFile&) = delete;
  PngFile& operator=(const PngFile&) = delete;
};

struct RawPng {
  png_uint_32 width{0}, height{0};
  int bit_depth{0}, color_type{0}, channels{0};
  std::vector<png_byte> data;  // rows packed, rowbytes each
  std::size_t rowbytes{0};
};

enum class ReadMode { kRgb8, kGray16 };

bool read_png_impl(std::FILE* fp, ReadMode mode, RawPng& out, std::vector<png_bytep>& rows) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  out.width = png_get_image_width(png, info);
  out.height = png_get_image_height(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  out.color_type = png_get_color_type(png, info);
  if (mode == ReadMode::kRgb8) {
    if (out.color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (out.color_type == PNG_COLOR_TYPE_GRAY && out.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (out.bit_depth == 16) png_set_strip_16(png);
    if (out.color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (out.color_type == PNG_COLOR_TYPE_GRAY || out.color_type == PNG_COLOR_TYPE_GRAY_ALPHA) {
      png_set_gray_to_rgb(png);
    }
  } else {
    if (out.color_type != PNG_COLOR_TYPE_GRAY) {
      png_destroy_read_struct(&png, &info, nullptr);
      return false;
    }
    if (out.bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  }
  png_read_update_info(png, info);
  out.rowbytes = png_get_rowbytes(png, info);
  out.channels = png_get_channels(png, info);
  out.bit_depth = png_get_bit_depth(png, info);
  out.data.resize(out.rowbytes * out.height);
  rows.resize(out.height);
  for (png_uint_32 r = 0; r < out.height; ++r) rows[r] = out.data.data() + r * out.rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

RawPng read_png(const fs::path& path, ReadMode mode) {
  PngFile f(path, "rb");
  if (!f.fp) throw ParseError("cannot open '" + path.string() + "'");
  png_byte sig[8];
  if (std::fread(sig, 1, 8, f.fp) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw ParseError("'" + path.string() + "' is not a PNG file");
  }
  std::rewind(f.fp);
  RawPng raw;
  std::vector<png_bytep> rows;
  if (!read_png_impl(f.fp, mode, raw, rows)) {
    throw ParseError("failed to decode PNG '" + path.string() + "'" +
                     (mode == ReadMode::kGray16 ? " (expected single-channel grayscale)" : ""));
  }
  return raw;
}

bool write_png_impl(std::FILE* fp, png_uint_32 w, png_uint_32 h, int bit_depth, int color_type,
                    std::vector<png_bytep>& rows) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) return false;
  png_infop info = png_create_info_struct(png);
  if (!info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, info ? &info : nullptr);
    return false;
  }
  png_init_io(png, fp);
  png_set_compression_level(png, 6);
  png_set_IHDR(png, info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void write_png(const fs::path& path, png_uint_32 w, png_uint_32 h, int bit_depth, int color_type,
               std::vector<png_byte>& data, std::size_t rowbytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  PngFile f(path, "wb");
  if (!f.fp) throw Error("cannot open '" + path.string() + "' for writing");
  std::vector<png_bytep> rows(h);
  for (png_uint_32 r = 0; r < h; ++r) rows[r] = data.data() + r * rowbytes;
  if (!write_png_impl(f.fp, w, h, bit_depth, color_type, rows)) {
    throw Error("failed to encode PNG '" + path.string() + "'");
  }
}

}  // namespace

// --- LiDAR ------------------------------------------------------------------

PointCloudd parse_lidar_bin(std::span<const std::uint8_t> bytes, const std::string& context) {
  if (bytes.size() % kLidarRecordBytes != 0) {
    throw ParseError(fmt::format("{}: length {} is not a multiple of {} bytes (truncated record at byte offset {})",
                                 context, bytes.size(), kLidarRecordBytes,
                                 bytes.size() - bytes.size() % kLidarRecordBytes));
  }
  const auto n = static_cast<Eigen::Index>(bytes.size() / kLidarRecordBytes);
  PointCloudd cloud(Points3<double>(3, n), Frame::kSensor);
  cloud.intensity.emplace(n);
  cloud.ring.emplace(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t base = static_cast<std::size_t>(i) * kLidarRecordBytes;
    float rec[5];
    for (int k = 0; k < 5; ++k) {
      rec[k] = load_f32_le(bytes.data() + base + 4 * static_cast<std::size_t>(k));
      if (!std::isfinite(rec[k])) {
        throw ParseError(fmt::format("{}: non-finite value at byte offset {}", context, base + 4 * k));
      }
    }
    cloud.positions.col(i) = Eigen::Vector3d(rec[0], rec[1], rec[2]);
    (*cloud.intensity)(i) = rec[3];
    (*cloud.ring)(i) = rec[4];
  }
  return cloud;
}

PointCloudd read_lidar_bin(const fs::path& path) { return parse_lidar_bin(read_bytes(path), path.string()); }

void write_lidar_bin(const fs::path& path, const PointCloudd& cloud) {
  std::vector<std::uint8_t> out;
  out.reserve(static_cast<std::size_t>(cloud.size()) * kLidarRecordBytes);
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) store_f32_le(static_cast<float>(cloud.positions(k, i)), out);
    store_f32_le(cloud.intensity ? static_cast<float>((*cloud.intensity)(i)) : 0.0f, out);
    store_f32_le(cloud.ring ? static_cast<float>((*cloud.ring)(i)) : 0.0f, out);
  }
  write_bytes(path, out);
}

// --- Calibration ------------------------------------------------------------

Se3Posed parse_pose(const json& j, const std::string& context) {
  const auto q = get_field<std::vector<double>>(j, "rotation", context);
  if (q.size() != 4) throw ParseError(context + ": rotation must be a (w, x, y, z) quaternion");
  const Eigen::Quaterniond quat(q[0], q[1], q[2], q[3]);
  if (!quat.coeffs().allFinite() || std::abs(quat.norm() - 1.0) > 1e-3) {
    throw ParseError(fmt::format("{}: rotation quaternion norm {} is not within 1e-3 of 1", context, quat.norm()));
  }
  const Eigen::Vector3d t = get_vec3(j, "translation", context);
  if (!t.allFinite()) throw ParseError(context + ": non-finite translation");
  return Se3Posed(quat, t);
}

nlohmann::ordered_json pose_to_json(const Se3Posed& pose) {
  nlohmann::ordered_json j;
  const auto& q = pose.rotation;
  j["rotation"] = {q.w(), q.x(), q.y(), q.z()};
  j["translation"] = {pose.translation.x(), pose.translation.y(), pose.translation.z()};
  return j;
}

Calibration parse_calibration(const json& j, const std::string& context) {
  if (!j.is_object()) throw ParseError(context + ": calibration must be a JSON object");
  const auto k = get_field<std::vector<std::vector<double>>>(j, "camera_intrinsic", context);
  if (k.size() != 3 || k[0].size() != 3 || k[1].size() != 3 || k[2].size() != 3) {
    throw ParseError(context + ": camera_intrinsic must be 3x3");
  }
  Calibration c;
  c.camera.fx = k[0][0];
  c.camera.fy = k[1][1];
  c.camera.cx = k[0][2];
  c.camera.cy = k[1][2];
  c.camera.width = get_field<int>(j, "width", context);
  c.camera.height = get_field<int>(j, "height", context);
  if (!c.camera.valid()) throw ParseError(context + ": invalid intrinsics or image size");
  if (k[0][1] != 0.0) spdlog::warn("{}: non-zero intrinsic skew ignored", context);
  if (j.contains("distortion")) {
    const auto d = get_field<std::vector<double>>(j, "distortion", context);
    if (std::any_of(d.begin(), d.end(), [](double v) { return v != 0.0; })) {
      spdlog::warn("{}: distortion coefficients ignored (pinhole model)", context);
    }
  }
  c.camera_to_ego = parse_pose(get_field<json>(j, "camera_to_ego", context), context + ".camera_to_ego");
  c.lidar_to_ego = j.contains("lidar_to_ego") ? parse_pose(j["lidar_to_ego"], context + ".lidar_to_ego")
                                              : Se3Posed::identity();
  c.ego_to_global = j.contains("ego_to_global") ? parse_pose(j["ego_to_global"], context + ".ego_to_global")
                                                : Se3Posed::identity();
  c.camera.sensor_from_reference = inverse(c.camera_to_ego);
  return c;
}

Calibration read_calibration(const fs::path& path) { return parse_calibration(read_json(path), path.string()); }

nlohmann::ordered_json calibration_to_json(const Calibration& c) {
  nlohmann::ordered_json j;
  j["camera_intrinsic"] = {{c.camera.fx, 0.0, c.camera.cx}, {0.0, c.camera.fy, c.camera.cy}, {0.0, 0.0, 1.0}};
  j["width"] = c.camera.width;
  j["height"] = c.camera.height;
  j["camera_to_ego"] = pose_to_json(c.camera_to_ego);
  j["lidar_to_ego"] = pose_to_json(c.lidar_to_ego);
  j["ego_to_global"] = pose_to_json(c.ego_to_global);
  return j;
}

// --- Images -----------------------------------------------------------------

RgbImage read_rgb_png(const fs::path& path) {
  RawPng raw = read_png(path, ReadMode::kRgb8);
  if (raw.channels != 3 || raw.bit_depth != 8) throw ParseError("'" + path.string() + "': unsupported PNG layout");
  RgbImage img(static_cast<int>(raw.width), static_cast<int>(raw.height));
  for (png_uint_32 r = 0; r < raw.height; ++r) {
    std::memcpy(img.pixels.data() + static_cast<std::size_t>(r) * raw.width * 3, raw.data.data() + r * raw.rowbytes,
                static_cast<std::size_t>(raw.width) * 3);
  }
  return img;
}

void write_rgb_png(const fs::path& path, const RgbImage& img) {
  std::vector<png_byte> data(img.pixels.begin(), img.pixels.end());
  write_png(path, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB,
            data, static_cast<std::size_t>(img.width) * 3);
}

Gray16Image read_gray16_png(const fs::path& path) {
  RawPng raw = read_png(path, ReadMode::kGray16);
  Gray16Image img{static_cast<int>(raw.width), static_cast<int>(raw.height), {}};
  img.pixels.resize(static_cast<std::size_t>(raw.width) * raw.height);
  for (png_uint_32 r = 0; r < raw.height; ++r) {
    const png_byte* row = raw.data.data() + r * raw.rowbytes;
    for (png_uint_32 c = 0; c < raw.width; ++c) {
      const std::size_t i = static_cast<std::size_t>(r) * raw.width + c;
      img.pixels[i] = raw.bit_depth == 16 ? static_cast<std::uint16_t>((row[2 * c] << 8) | row[2 * c + 1]) : row[c];
    }
  }
  return img;
}

void write_gray16_png(const fs::path& path, const Gray16Image& img) {
  std::vector<png_byte> data;
  data.reserve(img.pixels.size() * 2);
  for (const std::uint16_t v : img.pixels) {
    data.push_back(static_cast<png_byte>(v >> 8));
    data.push_back(static_cast<png_byte>(v & 0xff));
  }
  write_png(path, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 16, PNG_COLOR_TYPE_GRAY,
            data, static_cast<std::size_t>(img.width) * 2);
}

DepthMap read_depth(const fs::path& path) {
  if (path.extension() == ".png") {
    const Gray16Image mm = read_gray16_png(path);
    DepthMap d(mm.width, mm.height);
    for (std::size_t i = 0; i < mm.pixels.size(); ++i) d.depth[i] = static_cast<float>(mm.pixels[i]) / 1000.0f;
    return d;
  }
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kRawDepthMagic, 4) != 0) {
    throw ParseError("'" + path.string() + "': missing raw depth header");
  }
  const int w = static_cast<int>(load_u32_le(bytes.data() + 4));
  const int h = static_cast<int>(load_u32_le(bytes.data() + 8));
  const std::size_t expected = 16 + static_cast<std::size_t>(w) * h * 4;
  if (w <= 0 || h <= 0 || bytes.size() != expected) {
    throw ParseError(fmt::format("'{}': expected {} bytes for {}x{} depth, found {}", path.string(), expected, w, h,
                                 bytes.size()));
  }
  DepthMap d(w, h);
  for (std::size_t i = 0; i < d.depth.size(); ++i) {
    const float v = load_f32_le(bytes.data() + 16 + 4 * i);
    if (!std::isfinite(v) || v < 0.0f) {
      throw ParseError(fmt::format("'{}': invalid depth value at byte offset {}", path.string(), 16 + 4 * i));
    }
    d.depth[i] = v;
  }
  return d;
}

void write_depth_png(const fs::path& path, const DepthMap& depth) {
  Gray16Image img{depth.width, depth.height, std::vector<std::uint16_t>(depth.depth.size())};
  for (std::size_t i = 0; i < depth.depth.size(); ++i) {
    const double mm = std::floor(static_cast<double>(depth.depth[i]) * 1000.0 + 0.5);
    img.pixels[i] = static_cast<std::uint16_t>(std::clamp(mm, 0.0, 65535.0));
  }
  write_gray16_png(path, img);
}

void write_depth_raw(const fs::path& path, const DepthMap& depth) {
  std::vector<std::uint8_t> out(kRawDepthMagic, kRawDepthMagic + 4);
  store_u32_le(static_cast<std::uint32_t>(depth.width), out);
  store_u32_le(static_cast<std::uint32_t>(depth.height), out);
  store_u32_le(0, out);
  for (const float v : depth.depth) store_f32_le(v, out);
  write_bytes(path, out);
}

// --- Masks ------------------------------------------------------------------

InstanceMask mask_from_id_map(const Gray16Image& ids, int instance_id) {
  if (instance_id <= 0) throw ParseError("instance ids must be positive");
  InstanceMask m(ids.width, ids.height, instance_id);
  for (std::size_t i = 0; i < ids.pixels.size(); ++i) m.bitmap[i] = ids.pixels[i] == instance_id ? 1 : 0;
  return m;
}

InstanceMask decode_rle(const RleMask& rle, int instance_id) {
  InstanceMask m(rle.width, rle.height, instance_id);
  const std::size_t total = static_cast<std::size_t>(rle.width) * rle.height;
  std::size_t pos = 0;
  bool fg = false;
  for (const std::uint32_t run : rle.counts) {
    if (pos + run > total) throw ParseError("RLE counts exceed the mask size");
    if (fg) {
      for (std::size_t k = pos; k < pos + run; ++k) {
        const int col = static_cast<int>(k / static_cast<std::size_t>(rle.height));
        const int row = static_cast<int>(k % static_cast<std::size_t>(rle.height));
        m.set(col, row);
      }
    }
    pos += run;
    fg = !fg;
  }
  if (pos != total) throw ParseError("RLE counts do not cover the mask");
  return m;
}

RleMask encode_rle(const InstanceMask& mask) {
  RleMask rle{mask.height, mask.width, {}};
  bool fg = false;
  std::uint32_t run = 0;
  for (int col = 0; col < mask.width; ++col) {
    for (int row = 0; row < mask.height; ++row) {
      if (mask.contains(col, row) != fg) {
        rle.counts.push_back(run);
        run = 0;
        fg = !fg;
      }
      ++run;
    }
  }
  rle.counts.push_back(run);
  return rle;
}

// --- Boxes ------------------------------------------------------------------

std::vector<SceneBox> parse_boxes(const json& j, const std::string& context) {
  if (!j.is_array()) throw ParseError(context + ": expected a JSON array of boxes");
  static const std::set<std::string> kKnown = {"frame_id", "label", "score",     "center", "size",
                                               "yaw",      "velocity", "attribute", "num_pts"};
  std::vector<SceneBox> out;
  std::vector<std::string> problems;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string where = fmt::format("{}[{}]", context, i);
    try {
      const json& r = j[i];
      if (!r.is_object()) throw ParseError(where + ": not an object");
      for (const auto& [key, _] : r.items()) {
        if (!kKnown.count(key)) throw ParseError(where + ": unknown field '" + key + "'");
      }
      SceneBox b;
      b.frame_id = get_field<std::string>(r, "frame_id", where);
      b.box.label = get_field<std::string>(r, "label", where);
      b.box.score = get_field<double>(r, "score", where);
      b.box.center = get_vec3(r, "center", where);
      b.box.size = get_vec3(r, "size", where);
      b.box.yaw = normalize_angle(get_field<double>(r, "yaw", where));
      b.box.velocity.setConstant(std::numeric_limits<double>::quiet_NaN());
      if (r.contains("velocity") && !r["velocity"].is_null()) {
        const auto v = r["velocity"];
        if (!v.is_array() || v.size() != 2) throw ParseError(where + ": velocity must have 2 entries");
        for (int k = 0; k < 2; ++k) b.box.velocity[k] = v[static_cast<std::size_t>(k)].is_null()
                                                            ? std::numeric_limits<double>::quiet_NaN()
                                                            : v[static_cast<std::size_t>(k)].get<double>();
      }
      if (r.contains("attribute") && !r["attribute"].is_null()) b.attribute = get_field<std::string>(r, "attribute", where);
      if (r.contains("num_pts") && !r["num_pts"].is_null()) b.num_pts = get_field<int>(r, "num_pts", where);
      if (!(b.box.score >= 0.0 && b.box.score <= 1.0)) throw ParseError(where + ": score outside [0, 1]");
      if (!(b.box.size.array() > 0).all()) throw ParseError(where + ": size components must be positive");
      if (!b.box.center.allFinite() || !std::isfinite(b.box.yaw)) throw ParseError(where + ": non-finite geometry");
      out.push_back(std::move(b));
    } catch (const ParseError& e) {
      problems.emplace_back(e.what());
    } catch (const json::exception& e) {
      problems.push_back(where + ": " + e.what());
    }
  }
  if (!problems.empty()) {
    std::string msg = fmt::format("{}: {} invalid record(s)", context, problems.size());
    for (const auto& p : problems) msg += "\n  " + p;
    throw ParseError(msg);
  }
  return out;
}

std::vector<SceneBox> read_boxes(const fs::path& path) { return parse_boxes(read_json(path), path.string()); }

nlohmann::ordered_json boxes_to_json(std::span<const SceneBox> boxes) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const SceneBox& b : boxes) {
    nlohmann::ordered_json r;
    r["frame_id"] = b.frame_id;
    r["label"] = b.box.label;
    r["score"] = b.box.score;
    r["center"] = {b.box.center.x(), b.box.center.y(), b.box.center.z()};
    r["size"] = {b.box.size.x(), b.box.size.y(), b.box.size.z()};
    r["yaw"] = b.box.yaw;
    if (b.box.velocity.allFinite()) {
      r["velocity"] = {b.box.velocity.x(), b.box.velocity.y()};
    } else {
      r["velocity"] = nullptr;
    }
    if (b.attribute) r["attribute"] = *b.attribute;
    if (b.num_pts) r["num_pts"] = *b.num_pts;
    arr.push_back(std::move(r));
  }
  return arr;
}

void write_boxes(const fs::path& path, std::span<const SceneBox> boxes) {
  write_text(path, boxes_to_json(boxes).dump(2) + "\n");
}

// --- Misc -------------------------------------------------------------------

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("cannot open '" + path.string() + "'");
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  write_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

}  // namespace ov3d
