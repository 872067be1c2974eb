#include "ov3d/bev.hpp"

#include <cmath>

#include <fmt/format.h>

#include "ov3d/io.hpp"

namespace ov3d {

namespace {

struct Viewport {
  double size_px;
  double mpp;

  Eigen::Vector2d to_svg(const Eigen::Vector2d& p) const {
    return {size_px / 2 + p.x() / mpp, size_px / 2 - p.y() / mpp};
  }
};

Box3D to_view(const Box3D& box, const std::optional<Se3Posed>& ego_from_global) {
  if (!ego_from_global) return box;
  Box3D out = box;
  out.center = *ego_from_global * box.center;
  out.yaw = normalize_angle(box.yaw + yaw_of(*ego_from_global));
  return out;
}

void append_boxes(std::string& svg, std::span<const SceneBox> boxes, const std::string& frame_id, const char* id,
                  const char* color, const Viewport& vp, const BevOptions& opts) {
  svg += fmt::format("<g id=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\">\n", id, color);
  for (const SceneBox& sb : boxes) {
    if (sb.frame_id != frame_id) continue;
    const Box3D b = to_view(sb.box, opts.ego_from_global);
    std::string pts;
    for (const auto& c : b.bev_corners()) {
      const Eigen::Vector2d s = vp.to_svg(c);
      if (!pts.empty()) pts += ' ';
      pts += fmt::format("{:.3f},{:.3f}", s.x(), s.y());
    }
    const Eigen::Vector2d center = vp.to_svg(b.center.head<2>());
    const Eigen::Vector2d front =
        vp.to_svg(b.center.head<2>() + Eigen::Vector2d(std::cos(b.yaw), std::sin(b.yaw)) * (b.size.x() / 2));
    svg += fmt::format("<polygon points=\"{}\"/>\n", pts);
    svg += fmt::format("<line x1=\"{:.3f}\" y1=\"{:.3f}\" x2=\"{:.3f}\" y2=\"{:.3f}\"/>\n", center.x(), center.y(),
                       front.x(), front.y());
  }
  svg += "</g>\n";
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_bev(std::span<const SceneBox> preds, std::span<const SceneBox> gts, const std::string& frame_id,
                       const BevOptions& opts) {
  if (!(opts.meters_per_pixel > 0) || !(opts.range > 0)) throw ConfigError("bev scale and range must be positive");
  const Viewport vp{std::round(2 * opts.range / opts.meters_per_pixel), opts.meters_per_pixel};
  const double half = vp.size_px / 2;
  std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{0:.0f}\" viewBox=\"0 0 {0:.0f} {0:.0f}\">\n",
      vp.size_px);
  svg += fmt::format("<title>{}</title>\n", xml_escape(frame_id));
  svg += fmt::format("<rect x=\"0\" y=\"0\" width=\"{0:.0f}\" height=\"{0:.0f}\" fill=\"white\"/>\n", vp.size_px);
  svg += "<g id=\"axes\" stroke=\"#999999\" stroke-width=\"1\">\n";
  svg += fmt::format("<line x1=\"0\" y1=\"{0:.3f}\" x2=\"{1:.0f}\" y2=\"{0:.3f}\"/>\n", half, vp.size_px);
  svg += fmt::format("<line x1=\"{0:.3f}\" y1=\"0\" x2=\"{0:.3f}\" y2=\"{1:.0f}\"/>\n", half, vp.size_px);
  svg += "</g>\n";
  svg += fmt::format("<circle id=\"ego\" cx=\"{0:.3f}\" cy=\"{0:.3f}\" r=\"3\" fill=\"black\"/>\n", half);
  append_boxes(svg, gts, frame_id, "gt", "green", vp, opts);
  append_boxes(svg, preds, frame_id, "pred", "blue", vp, opts);
  svg += "</svg>\n";
  return svg;
}

void emit_bev(std::span<const SceneBox> preds, std::span<const SceneBox> gts, const std::string& frame_id,
              const std::filesystem::path& out, const BevOptions& opts) {
  write_text(out, render_bev(preds, gts, frame_id, opts));
}

}  // namespace ov3d
