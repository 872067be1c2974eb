#include <gtest/gtest.h>

#include <regex>

#include "ov3d/bev.hpp"
#include "ov3d/errors.hpp"
#include "ov3d/io.hpp"
#include "support/temp_dir.hpp"

namespace {

using namespace ov3d;

SceneBox make_box(const std::string& frame, Eigen::Vector3d center, Eigen::Vector3d size, double yaw) {
  SceneBox b;
  b.frame_id = frame;
  b.box.center = center;
  b.box.size = size;
  b.box.yaw = yaw;
  b.box.label = "car";
  b.box.score = 0.5;
  return b;
}

std::vector<std::string> polygons(const std::string& svg, const std::string& group) {
  const auto start = svg.find("<g id=\"" + group + "\"");
  if (start == std::string::npos) return {};
  const auto end = svg.find("</g>", start);
  const std::string body = svg.substr(start, end - start);
  std::vector<std::string> out;
  const std::regex re("<polygon points=\"([^\"]*)\"/>");
  for (auto it = std::sregex_iterator(body.begin(), body.end(), re); it != std::sregex_iterator(); ++it) {
    out.push_back((*it)[1]);
  }
  return out;
}

TEST(Bev, EmptyFrameHasAxesOnly) {
  const std::string svg = render_bev({}, {}, "f0");
  EXPECT_NE(svg.find("width=\"1000\" height=\"1000\""), std::string::npos);
  EXPECT_NE(svg.find("<g id=\"axes\""), std::string::npos);
  EXPECT_NE(svg.find("<line x1=\"0\" y1=\"500.000\" x2=\"1000\" y2=\"500.000\"/>"), std::string::npos);
  EXPECT_NE(svg.find("<line x1=\"500.000\" y1=\"0\" x2=\"500.000\" y2=\"1000\"/>"), std::string::npos);
  EXPECT_TRUE(polygons(svg, "gt").empty());
  EXPECT_TRUE(polygons(svg, "pred").empty());
}

TEST(Bev, AxisAlignedBoxCorners) {
  const std::vector<SceneBox> preds{make_box("f0", {10, 5, 1}, {4, 2, 1.5}, 0.0)};
  const std::string svg = render_bev(preds, {}, "f0");
  const auto poly = polygons(svg, "pred");
  ASSERT_EQ(poly.size(), 1u);
  EXPECT_EQ(poly[0], "620.000,440.000 580.000,440.000 580.000,460.000 620.000,460.000");
  // Heading tick from the center to the middle of the front edge.
  EXPECT_NE(svg.find("<line x1=\"600.000\" y1=\"450.000\" x2=\"620.000\" y2=\"450.000\"/>"), std::string::npos);
}

TEST(Bev, ScaleAndRangeSetCanvas) {
  BevOptions opts;
  opts.meters_per_pixel = 0.5;
  opts.range = 20;
  const std::vector<SceneBox> preds{make_box("f0", {0, 0, 1}, {2, 2, 1}, 0.0)};
  const std::string svg = render_bev(preds, {}, "f0", opts);
  EXPECT_NE(svg.find("width=\"80\" height=\"80\""), std::string::npos);
  EXPECT_EQ(polygons(svg, "pred")[0], "42.000,38.000 38.000,38.000 38.000,42.000 42.000,42.000");
}

TEST(Bev, IdenticalPredictionAndTruthCoincideInDifferentColors) {
  const std::vector<SceneBox> boxes{make_box("f0", {-3, 7, 1}, {4.2, 1.8, 1.5}, 0.7)};
  const std::string svg = render_bev(boxes, boxes, "f0");
  const auto gt = polygons(svg, "gt"), pred = polygons(svg, "pred");
  ASSERT_EQ(gt.size(), 1u);
  ASSERT_EQ(pred.size(), 1u);
  EXPECT_EQ(gt[0], pred[0]);
  EXPECT_NE(svg.find("<g id=\"gt\" fill=\"none\" stroke=\"green\""), std::string::npos);
  EXPECT_NE(svg.find("<g id=\"pred\" fill=\"none\" stroke=\"blue\""), std::string::npos);
}

TEST(Bev, OtherFramesAreIgnored) {
  const std::vector<SceneBox> preds{make_box("f0", {1, 1, 1}, {2, 2, 1}, 0.0), make_box("f1", {5, 1, 1}, {2, 2, 1}, 0.0)};
  EXPECT_EQ(polygons(render_bev(preds, {}, "f1"), "pred").size(), 1u);
  EXPECT_TRUE(polygons(render_bev(preds, {}, "f2"), "pred").empty());
}

TEST(Bev, EgoFrameTransform) {
  // Ego at global (100, 200) facing +y: a box 10 m ahead lands on the +x axis.
  BevOptions opts;
  opts.ego_from_global = inverse(Se3Posed(Eigen::Quaterniond(Eigen::AngleAxisd(kPi / 2, Eigen::Vector3d::UnitZ())),
                                          Eigen::Vector3d(100, 200, 0)));
  const std::vector<SceneBox> preds{make_box("f0", {100, 210, 1}, {2, 2, 1}, kPi / 2)};
  const auto poly = polygons(render_bev(preds, {}, "f0", opts), "pred");
  ASSERT_EQ(poly.size(), 1u);
  EXPECT_EQ(poly[0], "610.000,490.000 590.000,490.000 590.000,510.000 610.000,510.000");
}

TEST(Bev, DeterministicBytesAndEscapedTitle) {
  const std::vector<SceneBox> preds{make_box("a<b", {3, 4, 1}, {4, 2, 1}, 0.3)};
  const std::string a = render_bev(preds, preds, "a<b");
  EXPECT_EQ(a, render_bev(preds, preds, "a<b"));
  EXPECT_NE(a.find("<title>a&lt;b</title>"), std::string::npos);

  testing_support::TempDir dir;
  emit_bev(preds, preds, "a<b", dir / "out" / "bev.svg");
  const auto bytes = read_bytes(dir / "out" / "bev.svg");
  EXPECT_EQ(std::string(bytes.begin(), bytes.end()), a);
}

TEST(Bev, RejectsBadScale) {
  BevOptions opts;
  opts.meters_per_pixel = 0;
  EXPECT_THROW(render_bev({}, {}, "f0", opts), ConfigError);
}

}  // namespace
