#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "ov3d/cluster.hpp"
#include "support/oracles.hpp"

using namespace ov3d;

namespace {

PointCloudd blobs_with_outliers(std::mt19937& rng) {
  std::normal_distribution<double> n(0.0, 0.1);
  std::uniform_real_distribution<double> u(-20.0, 30.0);
  Points3<double> p(3, 105);
  for (int i = 0; i < 50; ++i) p.col(i) << n(rng), n(rng), n(rng);
  for (int i = 50; i < 100; ++i) p.col(i) << 10 + n(rng), n(rng), n(rng);
  // outliers placed well away from both blobs
  const double far[5][3] = {{-15, 5, 2}, {25, -8, 0}, {5, 12, -3}, {5, -12, 4}, {-5, -5, 10}};
  for (int i = 0; i < 5; ++i) p.col(100 + i) << far[i][0], far[i][1], far[i][2];
  (void)u;
  return PointCloudd(p, Frame::kGlobal);
}

void check_labeling_invariants(const PointCloudd& c, const ClusterLabeling& l, const DbscanParams& params) {
  ASSERT_EQ(l.labels.size(), static_cast<std::size_t>(c.size()));
  std::vector<std::size_t> counts(l.num_clusters(), 0);
  std::vector<bool> has_core(l.num_clusters(), false);
  for (Eigen::Index i = 0; i < c.size(); ++i) {
    const int lab = l.labels[static_cast<std::size_t>(i)];
    ASSERT_GE(lab, kNoise);
    if (lab == kNoise) continue;
    ASSERT_LT(lab, static_cast<int>(l.num_clusters()));
    ++counts[static_cast<std::size_t>(lab)];
    int nb = 0;
    for (Eigen::Index j = 0; j < c.size(); ++j) nb += (c.point(i) - c.point(j)).squaredNorm() <= params.eps * params.eps;
    if (nb >= params.min_pts) has_core[static_cast<std::size_t>(lab)] = true;
  }
  EXPECT_EQ(counts, l.cluster_sizes);
  for (std::size_t k = 0; k < counts.size(); ++k) {
    EXPECT_GE(counts[k], 1u);
    EXPECT_TRUE(has_core[k]);
  }
}

}  // namespace

TEST(Dbscan, EmptyCloud) {
  const ClusterLabeling l = dbscan(PointCloudd(), DbscanParams{});
  EXPECT_TRUE(l.labels.empty());
  EXPECT_EQ(l.num_clusters(), 0u);
}

TEST(Dbscan, SinglePointMinPtsOne) {
  const ClusterLabeling l = dbscan(PointCloudd(Eigen::Vector3d(1, 2, 3)), DbscanParams{0.5, 1});
  EXPECT_EQ(l.labels, std::vector<int>{0});
  EXPECT_EQ(l.cluster_sizes, std::vector<std::size_t>{1});
}

TEST(Dbscan, RejectsBadParams) {
  EXPECT_THROW(dbscan(PointCloudd(), DbscanParams{0.0, 5}), ConfigError);
  EXPECT_THROW(dbscan(PointCloudd(), DbscanParams{1.0, 0}), ConfigError);
}

TEST(Dbscan, TwoBlobsAndOutliers) {
  std::mt19937 rng(1);
  const PointCloudd c = blobs_with_outliers(rng);
  const DbscanParams params{0.5, 5};
  const ClusterLabeling l = dbscan(c, params);
  ASSERT_EQ(l.num_clusters(), 2u);
  EXPECT_EQ(l.cluster_sizes, (std::vector<std::size_t>{50, 50}));
  for (int i = 100; i < 105; ++i) EXPECT_EQ(l.labels[static_cast<std::size_t>(i)], kNoise);
  EXPECT_EQ(oracle::to_partition(l.labels), oracle::to_partition(oracle::naive_dbscan(c.positions, 0.5, 5)));
  check_labeling_invariants(c, l, params);
}

TEST(Dbscan, EpsIsInclusive) {
  Points3<double> p(3, 2);
  p.col(0) << 0, 0, 0;
  p.col(1) << 0.5, 0, 0;
  const ClusterLabeling l = dbscan(PointCloudd(p), DbscanParams{0.5, 2});
  EXPECT_EQ(l.labels, (std::vector<int>{0, 0}));
}

TEST(Dbscan, BorderPointGoesToNearestCore) {
  // Two core chains, eps 0.25, min_pts 4. The point at 0.44 has only three
  // neighbors (itself, 0.2 and 0.65) so it is a border point of both.
  Points3<double> p(3, 9);
  const double xs[] = {0.0, 0.05, 0.1, 0.2, 0.44, 0.65, 0.75, 0.8, 0.85};
  for (int i = 0; i < 9; ++i) p.col(i) << xs[i], 0, 0;
  const ClusterLabeling l = dbscan(PointCloudd(p), DbscanParams{0.25, 4});
  ASSERT_EQ(l.num_clusters(), 2u);
  EXPECT_EQ(l.labels[4], l.labels[5]);  // 0.21 to the right core, 0.24 to the left
  EXPECT_NE(l.labels[4], l.labels[3]);
  EXPECT_EQ(oracle::to_partition(l.labels), oracle::to_partition(oracle::naive_dbscan(p, 0.25, 4)));
}

TEST(Dbscan, MatchesOracleOnLatticeBoundaries) {
  // Grid spacing equal to eps puts many pairs exactly on the radius.
  for (double eps : {0.1, 0.3, 0.75, 1.0}) {
    Points3<double> p(3, 6 * 6 * 4);
    int k = 0;
    for (int x = 0; x < 6; ++x)
      for (int y = 0; y < 6; ++y)
        for (int z = 0; z < 4; ++z) p.col(k++) << x * eps + 3.7, y * eps - 11.3, z * eps;
    for (int min_pts : {2, 4, 6, 7}) {
      const ClusterLabeling l = dbscan(PointCloudd(p), DbscanParams{eps, min_pts});
      EXPECT_EQ(oracle::to_partition(l.labels), oracle::to_partition(oracle::naive_dbscan(p, eps, min_pts)))
          << "eps " << eps << " min_pts " << min_pts;
    }
  }
}

TEST(Dbscan, RandomInstancesMatchOracleAndArePermutationInvariant) {
  std::mt19937 rng(2);
  std::uniform_int_distribution<int> npts(0, 300), mp(1, 8);
  std::uniform_real_distribution<double> eps_d(0.2, 1.5), u(0.0, 8.0);
  for (int trial = 0; trial < 60; ++trial) {
    const int n = npts(rng);
    Points3<double> p(3, n);
    for (int i = 0; i < n; ++i) p.col(i) << u(rng), u(rng), u(rng) / 4;
    const DbscanParams params{eps_d(rng), mp(rng)};
    const ClusterLabeling l = dbscan(PointCloudd(p), params);
    const auto expected = oracle::to_partition(oracle::naive_dbscan(p, params.eps, params.min_pts));
    ASSERT_EQ(oracle::to_partition(l.labels), expected) << "trial " << trial;
    check_labeling_invariants(PointCloudd(p), l, params);

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const PointCloudd shuffled = select(PointCloudd(p), perm);
    const ClusterLabeling ls = dbscan(shuffled, params);
    std::vector<int> back(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) back[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = ls.labels[static_cast<std::size_t>(i)];
    EXPECT_EQ(oracle::to_partition(back), expected) << "trial " << trial;
  }
}

TEST(Dbscan, FloatMatchesDoubleOnSeparatedData) {
  std::mt19937 rng(3);
  const PointCloudd c = blobs_with_outliers(rng);
  const PointCloud<float> cf(c.positions.cast<float>());
  EXPECT_EQ(dbscan(cf, DbscanParams{0.5, 5}).labels, dbscan(c, DbscanParams{0.5, 5}).labels);
}

TEST(Densest, SingleClusterVerbatim) {
  Points3<double> p = Points3<double>::Random(3, 20) * 0.1;
  const PointCloudd c(p);
  const ClusterLabeling l = dbscan(c, DbscanParams{1.0, 3});
  ASSERT_EQ(l.num_clusters(), 1u);
  EXPECT_EQ(densest_cluster(c, l).positions, p);
}

TEST(Densest, PicksLargest) {
  std::mt19937 rng(4);
  std::normal_distribution<double> n(0.0, 0.05);
  Points3<double> p(3, 100);
  for (int i = 0; i < 40; ++i) p.col(i) << n(rng), n(rng), n(rng);
  for (int i = 40; i < 100; ++i) p.col(i) << 5 + n(rng), n(rng), n(rng);
  const PointCloudd c(p);
  const ClusterLabeling l = dbscan(c, DbscanParams{0.5, 4});
  ASSERT_EQ(l.cluster_sizes, (std::vector<std::size_t>{40, 60}));
  const PointCloudd d = densest_cluster(c, l);
  EXPECT_EQ(d.size(), 60);
  EXPECT_EQ(d.positions, p.rightCols(60));
}

TEST(Densest, TieGoesToLowestId) {
  ClusterLabeling l{{1, 0, 1, 0}, {2, 2}};
  Points3<double> p(3, 4);
  p << 0, 1, 2, 3, 0, 0, 0, 0, 0, 0, 0, 0;
  const PointCloudd d = densest_cluster(PointCloudd(p), l);
  EXPECT_EQ(d.point(0).x(), 1.0);
  EXPECT_EQ(d.point(1).x(), 3.0);
}

TEST(Densest, AllNoiseThrows) {
  Points3<double> p(3, 3);
  p << 0, 10, 20, 0, 0, 0, 0, 0, 0;
  const PointCloudd c(p);
  EXPECT_THROW(densest_cluster(c, dbscan(c, DbscanParams{1.0, 2})), AllNoiseError);
}

TEST(Medoid, SinglePoint) { EXPECT_EQ(medoid(PointCloudd(Eigen::Vector3d(4, 5, 6))), Eigen::Vector3d(4, 5, 6)); }

TEST(Medoid, CollinearExample) {
  Points3<double> p(3, 3);
  p << 0, 1, 10, 0, 0, 0, 0, 0, 0;
  EXPECT_EQ(medoid(PointCloudd(p)), Eigen::Vector3d(1, 0, 0));
}

TEST(Medoid, TieGoesToLowestIndex) {
  Points3<double> p(3, 2);
  p << 3, -3, 0, 0, 0, 0;
  EXPECT_EQ(medoid(PointCloudd(p)), Eigen::Vector3d(3, 0, 0));
}

TEST(Medoid, EmptyThrows) { EXPECT_THROW(medoid(PointCloudd()), EmptySegmentError); }

TEST(Medoid, MatchesBruteForce) {
  std::mt19937 rng(5);
  std::normal_distribution<double> n(0.0, 3.0);
  for (int trial = 0; trial < 30; ++trial) {
    Points3<double> p(3, 100);
    for (int i = 0; i < 100; ++i) p.col(i) << n(rng), n(rng), n(rng);
    const Eigen::Vector3d m = medoid(PointCloudd(p));
    EXPECT_EQ(m, p.col(static_cast<Eigen::Index>(oracle::brute_medoid_index(p))));
  }
}
