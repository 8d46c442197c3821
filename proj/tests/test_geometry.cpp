#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <vector>

#include "fcslam/geometry.hpp"

using namespace fcslam;

namespace {

Eigen::Matrix3d as_matrix(const Pose2& p) {
  Eigen::Matrix3d m;
  m << std::cos(p.theta), -std::sin(p.theta), p.x, std::sin(p.theta), std::cos(p.theta), p.y, 0, 0, 1;
  return m;
}

Pose2 from_matrix(const Eigen::Matrix3d& m) { return {m(0, 2), m(1, 2), std::atan2(m(1, 0), m(0, 0))}; }

void expect_pose_near(const Pose2& a, const Pose2& b, double tol) {
  EXPECT_NEAR(a.x, b.x, tol);
  EXPECT_NEAR(a.y, b.y, tol);
  EXPECT_NEAR(normalize_angle(a.theta - b.theta), 0.0, tol);
}

Pose2 random_pose(Rng& rng) {
  std::uniform_real_distribution<double> t(-10.0, 10.0), a(-kPi, kPi);
  return make_pose(t(rng), t(rng), a(rng));
}

}  // namespace

TEST(Se2, IdentityComposeIsNeutral) {
  const Pose2 p = make_pose(1.5, -2.0, 0.7);
  expect_pose_near(se2_compose(Pose2::identity(), p), p, 1e-15);
  expect_pose_near(se2_compose(p, Pose2::identity()), p, 1e-15);
}

TEST(Se2, QuarterTurnComposition) {
  expect_pose_near(se2_compose(make_pose(1, 0, kPi / 2), make_pose(1, 0, 0)), make_pose(1, 1, kPi / 2), 1e-12);
}

TEST(Se2, ComposeMatchesHomogeneousProduct) {
  Rng rng(11);
  for (int k = 0; k < 200; ++k) {
    const Pose2 a = random_pose(rng), b = random_pose(rng);
    expect_pose_near(se2_compose(a, b), from_matrix(as_matrix(a) * as_matrix(b)), 1e-12);
    expect_pose_near(se2_inverse(a), from_matrix(as_matrix(a).inverse()), 1e-12);
  }
}

TEST(Se2, BetweenRoundTrips) {
  const Pose2 p = make_pose(3, 4, -1.0);
  expect_pose_near(se2_between(p, p), Pose2::identity(), 1e-12);
  expect_pose_near(se2_between(Pose2::identity(), p), p, 1e-12);
  Rng rng(12);
  for (int k = 0; k < 200; ++k) {
    const Pose2 a = random_pose(rng), b = random_pose(rng);
    expect_pose_near(se2_compose(a, se2_between(a, b)), b, 1e-12);
  }
}

TEST(Se2, ApplyMatchesHomogeneousProduct) {
  EXPECT_NEAR(se2_apply(Pose2::identity(), {3, 4}).x, 3.0, 1e-15);
  EXPECT_NEAR(se2_apply(Pose2::identity(), {3, 4}).y, 4.0, 1e-15);
  const Point2 flipped = se2_apply(make_pose(0, 0, kPi), {1, 0});
  EXPECT_NEAR(flipped.x, -1.0, 1e-15);
  EXPECT_NEAR(flipped.y, 0.0, 1e-15);

  Rng rng(13);
  std::uniform_real_distribution<double> u(-20.0, 20.0);
  for (int k = 0; k < 200; ++k) {
    const Pose2 p = random_pose(rng);
    const Point2 q{u(rng), u(rng)};
    const Eigen::Vector3d h = as_matrix(p) * Eigen::Vector3d(q.x, q.y, 1.0);
    const Point2 r = se2_apply(p, q);
    EXPECT_NEAR(r.x, h.x(), 1e-12);
    EXPECT_NEAR(r.y, h.y(), 1e-12);
    const Point2 back = se2_apply_inverse(p, r);
    EXPECT_NEAR(back.x, q.x, 1e-12);
    EXPECT_NEAR(back.y, q.y, 1e-12);
  }
}

TEST(Se2, NormalizeAngleRange) {
  EXPECT_DOUBLE_EQ(normalize_angle(kPi), kPi);
  EXPECT_NEAR(normalize_angle(-kPi), kPi, 1e-15);
  EXPECT_NEAR(normalize_angle(3 * kPi + 0.25), -kPi + 0.25, 1e-12);
  EXPECT_NEAR(normalize_angle(-7.0), -7.0 + 2 * kPi, 1e-12);
}

TEST(Se2, AlignPointSetsRecoversRigidMotion) {
  Rng rng(14);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const Pose2 truth = make_pose(1.2, -0.4, 0.9);
  std::vector<Point2> src(12), dst(12);
  for (std::size_t i = 0; i < src.size(); ++i) {
    src[i] = {u(rng), u(rng)};
    dst[i] = se2_apply(truth, src[i]);
  }
  expect_pose_near(align_point_sets(src.data(), dst.data(), src.size()), truth, 1e-12);
  expect_pose_near(align_point_sets(nullptr, nullptr, 0), Pose2::identity(), 0.0);
}

TEST(Seeds, DerivedStreamsAreStableAndDistinct) {
  const RngSeed root{42};
  EXPECT_EQ(derive_seed(root, "forest", 3).seed, derive_seed(root, "forest", 3).seed);
  EXPECT_NE(derive_seed(root, "forest", 3).seed, derive_seed(root, "forest", 4).seed);
  EXPECT_NE(derive_seed(root, "forest", 3).seed, derive_seed(root, "scan", 3).seed);
  EXPECT_NE(derive_seed(root, "forest", 3).seed, derive_seed(RngSeed{43}, "forest", 3).seed);
}
