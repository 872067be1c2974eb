#include <gtest/gtest.h>

#include <random>

#include "ov3d/box.hpp"

using namespace ov3d;

namespace {

/// Points on the faces of an upright box (corners included).
PointCloudd box_surface(const Eigen::Vector3d& center, const Eigen::Vector3d& size, double yaw, int per_face,
                        std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  Points3<double> p(3, 6 * per_face + 8);
  int k = 0;
  for (int face = 0; face < 6; ++face) {
    for (int i = 0; i < per_face; ++i) {
      Eigen::Vector3d l(u(rng), u(rng), u(rng));
      l[face / 2] = face % 2 ? 0.5 : -0.5;
      p.col(k++) = l;
    }
  }
  for (int c = 0; c < 8; ++c) p.col(k++) << (c & 1 ? 0.5 : -0.5), (c & 2 ? 0.5 : -0.5), (c & 4 ? 0.5 : -0.5);
  const Eigen::Matrix3d r = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  p = (r * size.asDiagonal() * p).colwise() + center;
  return PointCloudd(p, Frame::kGlobal);
}

InflationStrategy strategy(InflationVariant v) {
  InflationStrategy s;
  s.variant = v;
  s.priors["car"] = {4.0, 1.9, 1.6};
  return s;
}

}  // namespace

TEST(Variant, RoundTripNames) {
  for (auto v : {InflationVariant::kMedoidPrior, InflationVariant::kCalipersFull, InflationVariant::kMedoidCalipers})
    EXPECT_EQ(parse_variant(to_string(v)), v);
  EXPECT_THROW(parse_variant("lane_geometry"), ConfigError);
}

TEST(Inflate, CalipersRecoversAxisAlignedBox) {
  std::mt19937 rng(1);
  const PointCloudd seg = box_surface({10, -4, 0.8}, {4.5, 2.0, 1.6}, 0.0, 100, rng);
  const Box3D b = inflate(seg, strategy(InflationVariant::kCalipersFull), "car", 0.8);
  EXPECT_NEAR(b.size.x(), 4.5, 1e-6);
  EXPECT_NEAR(b.size.y(), 2.0, 1e-6);
  EXPECT_NEAR(b.size.z(), 1.6, 1e-6);
  EXPECT_TRUE(b.center.isApprox(Eigen::Vector3d(10, -4, 0.8), 1e-9));
  const double m = std::fmod(std::abs(b.yaw), kPi / 2);
  EXPECT_LT(std::min<double>(m, kPi / 2 - m), 1e-9);
  EXPECT_EQ(b.velocity, Eigen::Vector2d::Zero());
  EXPECT_TRUE(b.valid());
}

TEST(Inflate, MedoidPriorSinglePoint) {
  const PointCloudd seg(Eigen::Vector3d(3, 7, 0.5));
  const Box3D b = inflate(seg, strategy(InflationVariant::kMedoidPrior), "car", 0.6);
  EXPECT_EQ(b.center, Eigen::Vector3d(3, 7, 0.5));
  EXPECT_EQ(b.size, Eigen::Vector3d(4.0, 1.9, 1.6));
  EXPECT_EQ(b.yaw, 0.0);
  EXPECT_EQ(b.label, "car");
  EXPECT_EQ(b.score, 0.6);
}

TEST(Inflate, MedoidPriorUsesHeadingHint) {
  const PointCloudd seg(Eigen::Vector3d(3, 7, 0.5));
  EXPECT_NEAR(inflate(seg, strategy(InflationVariant::kMedoidPrior), "car", 0.6, 4.0).yaw, 4.0 - 2 * kPi, 1e-15);
}

TEST(Inflate, MedoidPriorMissingPriorIsConfigError) {
  const PointCloudd seg(Eigen::Vector3d(3, 7, 0.5));
  EXPECT_THROW(inflate(seg, strategy(InflationVariant::kMedoidPrior), "bus", 0.6), ConfigError);
}

TEST(Inflate, EmptySegmentThrows) {
  EXPECT_THROW(inflate(PointCloudd(), strategy(InflationVariant::kCalipersFull), "car", 0.5), EmptySegmentError);
}

TEST(Inflate, MedoidCalipersAgreesWithCalipersExceptCenter) {
  std::mt19937 rng(2);
  const PointCloudd seg = box_surface({-2, 5, 1.0}, {4.2, 1.8, 1.5}, 0.4, 60, rng);
  const Box3D a = inflate(seg, strategy(InflationVariant::kCalipersFull), "car", 0.5);
  const Box3D b = inflate(seg, strategy(InflationVariant::kMedoidCalipers), "car", 0.5);
  EXPECT_EQ(a.size, b.size);
  EXPECT_EQ(a.yaw, b.yaw);
  EXPECT_EQ(a.center.z(), b.center.z());
  EXPECT_NE(a.center.head<2>(), b.center.head<2>());
}

TEST(Inflate, DegenerateSegmentsAreFloored) {
  Points3<double> p(3, 3);
  p << 0, 1, 2, 0, 0, 0, 0.5, 0.5, 0.5;  // collinear, flat
  const Box3D b = inflate(PointCloudd(p), strategy(InflationVariant::kCalipersFull), "car", 0.5);
  EXPECT_NEAR(b.size.x(), 2.0, 1e-12);
  EXPECT_EQ(b.size.y(), 0.2);
  EXPECT_EQ(b.size.z(), 0.2);
  EXPECT_TRUE(b.valid());

  const Box3D single = inflate(PointCloudd(Eigen::Vector3d(1, 1, 1)), strategy(InflationVariant::kCalipersFull), "car", 0.5);
  EXPECT_EQ(single.size, Eigen::Vector3d(0.2, 0.2, 0.2));
  EXPECT_EQ(single.center, Eigen::Vector3d(1, 1, 1));
}

TEST(Box, BevCornersCounterClockwiseFromFrontLeft) {
  Box3D b;
  b.center = {1, 2, 0};
  b.size = {4, 2, 1};
  b.yaw = kPi / 2;
  const auto c = b.bev_corners();
  EXPECT_LT((c[0] - Eigen::Vector2d(0, 4)).norm(), 1e-12);   // front-left
  EXPECT_LT((c[1] - Eigen::Vector2d(0, 0)).norm(), 1e-12);
  EXPECT_LT((c[2] - Eigen::Vector2d(2, 0)).norm(), 1e-12);
  EXPECT_LT((c[3] - Eigen::Vector2d(2, 4)).norm(), 1e-12);
}

TEST(Box, Validity) {
  Box3D b;
  EXPECT_TRUE(b.valid());
  b.yaw = -kPi;
  EXPECT_FALSE(b.valid());
  b.yaw = 0;
  b.size.y() = 0;
  EXPECT_FALSE(b.valid());
}

TEST(AssignLabel, TransfersLabelAndScoreOnly) {
  Box3D geom;
  geom.center = {1.25, -3.5, 0.75};
  geom.size = {4.1, 1.7, 1.4};
  geom.yaw = 0.3;
  geom.velocity = {0.1, 0.2};
  InstanceDetection d1, d2;
  d1.label = "car";
  d1.score = 0.87;
  d2.label = "truck";
  d2.score = 0.42;
  const Box3D a = assign_label(d1, geom);
  const Box3D b = assign_label(d2, geom);
  EXPECT_EQ(a.label, "car");
  EXPECT_EQ(a.score, 0.87);
  EXPECT_EQ(b.label, "truck");
  EXPECT_EQ(b.score, 0.42);
  for (const Box3D& x : {a, b}) {
    EXPECT_EQ(x.center, geom.center);
    EXPECT_EQ(x.size, geom.size);
    EXPECT_EQ(x.yaw, geom.yaw);
    EXPECT_EQ(x.velocity, geom.velocity);
  }
}
