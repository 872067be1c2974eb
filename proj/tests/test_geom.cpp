#include <gtest/gtest.h>

#include <random>

#include "ov3d/geom.hpp"

using namespace ov3d;

namespace {

Se3Posed random_pose(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return Se3Posed(q, Eigen::Vector3d(n(rng), n(rng), n(rng)) * 10.0);
}

double rotation_angle(const Eigen::Quaterniond& q) { return Eigen::AngleAxisd(q.normalized()).angle(); }

CameraModeld test_camera() { return make_camera(1000.0, 1000.0, 800.0, 450.0, 1600, 900); }

}  // namespace

TEST(Pose, ComposeIdentity) {
  const Se3Posed p = compose(Se3Posed::identity(), Se3Posed::identity());
  EXPECT_DOUBLE_EQ(rotation_angle(p.rotation), 0.0);
  EXPECT_EQ(p.translation, Eigen::Vector3d::Zero());
}

TEST(Pose, InverseLaw) {
  std::mt19937 rng(1);
  for (int i = 0; i < 200; ++i) {
    const Se3Posed p = random_pose(rng);
    for (const Se3Posed& c : {compose(p, inverse(p)), compose(inverse(p), p)}) {
      EXPECT_LT(rotation_angle(c.rotation), 1e-9);
      EXPECT_LT(c.translation.norm(), 1e-9);
    }
    EXPECT_NEAR(p.rotation.norm(), 1.0, 1e-9);
  }
}

TEST(Pose, ComposeAppliesRightFirst) {
  const Se3Posed rz = yaw_pose<double>(kPi / 2);
  const Eigen::Vector3d v = compose(rz, rz) * Eigen::Vector3d::UnitX();
  EXPECT_NEAR(v.x(), -1.0, 1e-12);
  EXPECT_NEAR(v.y(), 0.0, 1e-12);

  const Se3Posed shift(Eigen::Quaterniond::Identity(), {1, 0, 0});
  // rotate then shift
  EXPECT_TRUE((compose(shift, rz) * Eigen::Vector3d::UnitX()).isApprox(Eigen::Vector3d(1, 1, 0), 1e-12));
  // shift then rotate
  EXPECT_TRUE((compose(rz, shift) * Eigen::Vector3d::UnitX()).isApprox(Eigen::Vector3d(0, 2, 0), 1e-12));
}

TEST(Pose, ConstructorNormalizes) {
  const Se3Posed p(Eigen::Quaterniond(2, 0, 0, 0), Eigen::Vector3d::Zero());
  EXPECT_NEAR(p.rotation.norm(), 1.0, 1e-15);
}

TEST(TransformCloud, IdentityAndTranslation) {
  PointCloudd c(Points3<double>::Zero(3, 1), Frame::kSensor);
  c.intensity = Eigen::VectorXd::Constant(1, 3.0);
  const PointCloudd same = transform_cloud(Se3Posed::identity(), c);
  EXPECT_EQ(same.positions, c.positions);
  EXPECT_EQ(same.frame, Frame::kSensor);

  const PointCloudd moved = transform_cloud(Se3Posed(Eigen::Quaterniond::Identity(), {1, 2, 3}), c, Frame::kEgo);
  EXPECT_EQ(moved.point(0), Eigen::Vector3d(1, 2, 3));
  EXPECT_EQ(moved.frame, Frame::kEgo);
  ASSERT_TRUE(moved.intensity);
  EXPECT_EQ((*moved.intensity)(0), 3.0);
}

TEST(TransformCloud, RotationAboutZ) {
  PointCloudd c(Eigen::Vector3d::UnitX());
  const PointCloudd r = transform_cloud(yaw_pose<double>(kPi / 2), c);
  EXPECT_NEAR(r.point(0).x(), 0.0, 1e-12);
  EXPECT_NEAR(r.point(0).y(), 1.0, 1e-12);
  EXPECT_NEAR(r.point(0).z(), 0.0, 1e-12);
}

TEST(TransformCloud, InverseRoundTripPreservesOrder) {
  std::mt19937 rng(2);
  PointCloudd c(Points3<double>::Random(3, 500) * 50.0);
  c.ring = Eigen::VectorXd::LinSpaced(500, 0, 499);
  for (int k = 0; k < 20; ++k) {
    const Se3Posed p = random_pose(rng);
    const PointCloudd back = transform_cloud(inverse(p), transform_cloud(p, c));
    EXPECT_LT((back.positions - c.positions).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(*back.ring, *c.ring);
  }
}

TEST(Camera, RejectsBadIntrinsics) {
  EXPECT_THROW(make_camera(0.0, 1.0, 1.0, 1.0, 10, 10), ConfigError);
  EXPECT_THROW(make_camera(1.0, 1.0, 10.0, 1.0, 10, 10), ConfigError);
  EXPECT_THROW(make_camera(1.0, 1.0, 1.0, -0.5, 10, 10), ConfigError);
  EXPECT_NO_THROW(make_camera(1.0, 1.0, 0.0, 0.0, 10, 10));
}

TEST(Project, OpticalAxisHitsPrincipalPoint) {
  const auto map = project_cloud(test_camera(), PointCloudd(Eigen::Vector3d(0, 0, 5), Frame::kCamera));
  ASSERT_EQ(map.size(), 1);
  EXPECT_EQ(map.pixel_uv.col(0), Eigen::Vector2d(800, 450));
  EXPECT_EQ(map.depth(0), 5.0);
  EXPECT_EQ(map.source_index[0], 0);
}

TEST(Project, PinholeFormula) {
  const auto map = project_cloud(test_camera(), PointCloudd(Eigen::Vector3d(1, 0, 2), Frame::kCamera));
  ASSERT_EQ(map.size(), 1);
  EXPECT_DOUBLE_EQ(map.pixel_uv(0, 0), 1300.0);
}

TEST(Project, DropsBehindNearAndOutside) {
  Points3<double> p(3, 6);
  p.col(0) << 0, 0, -5;       // behind
  p.col(1) << 0, 0, 0.1;      // exactly at the near plane
  p.col(2) << 0, 0, 0.1001;   // just past it
  p.col(3) << 10, 0, 1;       // u = 10800
  p.col(4) << -0.8, 0, 1;     // u = 0, first column
  p.col(5) << 0.8, 0, 1;      // u = 1600, one past the last column
  const auto map = project_cloud(test_camera(), PointCloudd(p, Frame::kCamera));
  ASSERT_EQ(map.size(), 2);
  EXPECT_EQ(map.source_index, (std::vector<std::int64_t>{2, 4}));
}

TEST(Project, FuzzNeverEmitsInvalidEntries) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> xy(-40, 40), z(-5, 60);
  Points3<double> p(3, 20000);
  for (Eigen::Index i = 0; i < p.cols(); ++i) p.col(i) << xy(rng), xy(rng), z(rng);
  const CameraModeld cam = test_camera();
  const auto map = project_cloud(cam, PointCloudd(p, Frame::kCamera));
  EXPECT_GT(map.size(), 0);
  for (Eigen::Index k = 0; k < map.size(); ++k) {
    EXPECT_GT(map.depth(k), kMinCameraDepth);
    EXPECT_TRUE(cam.in_bounds(map.pixel_uv(0, k), map.pixel_uv(1, k)));
    if (k) EXPECT_LT(map.source_index[k - 1], map.source_index[k]);
  }
}

TEST(Backproject, PrincipalPoint) {
  const Eigen::Vector3d p = backproject_pixel(test_camera(), 800.0, 450.0, 4.0);
  EXPECT_EQ(p, Eigen::Vector3d(0, 0, 4));
}

TEST(Backproject, RejectsNonPositiveDepth) {
  EXPECT_THROW(backproject_pixel(test_camera(), 1.0, 1.0, 0.0), InvalidDepthError);
  EXPECT_THROW(backproject_pixel(test_camera(), 1.0, 1.0, -2.0), InvalidDepthError);
  EXPECT_THROW(backproject_pixel(test_camera(), 1.0, 1.0, std::nan("")), InvalidDepthError);
}

TEST(Backproject, RoundTrip) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(0, 1600), v(0, 900), d(0.1001, 80);
  const CameraModeld cam = test_camera();
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector3d p = backproject_pixel(cam, u(rng), v(rng), d(rng));
    const auto map = project_cloud(cam, PointCloudd(p, Frame::kCamera));
    ASSERT_EQ(map.size(), 1);
    const Eigen::Vector3d q = backproject_pixel(cam, map.pixel_uv(0, 0), map.pixel_uv(1, 0), map.depth(0));
    EXPECT_LT((q - p).norm(), 1e-9 * p.norm());
  }
}

TEST(Angles, NormalizeRange) {
  EXPECT_DOUBLE_EQ(normalize_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(normalize_angle(-kPi), kPi);
  EXPECT_NEAR(normalize_angle(3 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(normalize_angle(-7.0), -7.0 + 2 * kPi, 1e-15);
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> a(-100, 100);
  for (int i = 0; i < 1000; ++i) {
    const double x = normalize_angle(a(rng));
    EXPECT_GT(x, -kPi);
    EXPECT_LE(x, kPi);
  }
}

TEST(Angles, YawOfPose) {
  EXPECT_NEAR(yaw_of(yaw_pose<double>(0.7)), 0.7, 1e-15);
  EXPECT_NEAR(yaw_of(yaw_pose<double>(-2.9)), -2.9, 1e-15);
}

TEST(Geom, FloatInstantiation) {
  const auto cam = make_camera(100.0f, 100.0f, 50.0f, 50.0f, 100, 100);
  const auto map = project_cloud(cam, PointCloud<float>(Eigen::Vector3f(0.25f, 0.0f, 1.0f), Frame::kCamera));
  ASSERT_EQ(map.size(), 1);
  EXPECT_FLOAT_EQ(map.pixel_uv(0, 0), 75.0f);
}
