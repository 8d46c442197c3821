#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fcslam/errors.hpp"
#include "fcslam/tree_detect.hpp"

using namespace fcslam;

namespace {

std::vector<Point2> ring(Point2 c, double r, int n, double from = 0.0, double to = 2 * kPi) {
  std::vector<Point2> pts;
  for (int i = 0; i < n; ++i) {
    const double a = from + (to - from) * i / n;
    pts.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
  }
  return pts;
}

}  // namespace

TEST(DpMeans, EmptyInputHasNoClusters) { EXPECT_TRUE(dp_means({}, DpMeansConfig{}).empty()); }

TEST(DpMeans, SeparatedGroupsFormTwoClusters) {
  std::vector<Point2> pts;
  for (int i = 0; i < 5; ++i) pts.push_back({0.1 * i, 0.05 * i});
  for (int i = 0; i < 5; ++i) pts.push_back({10 + 0.1 * i, -0.05 * i});
  const auto c = dp_means(pts, DpMeansConfig{1.0, 50});
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0], (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(c[1], (std::vector<int>{5, 6, 7, 8, 9}));
}

TEST(DpMeans, NoSinglePointMoveLowersObjective) {
  Rng rng(41);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::uniform_int_distribution<int> count(2, 12);
  const double lambda = 0.8;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Point2> pts(count(rng));
    for (auto& p : pts) p = {u(rng), u(rng)};
    const auto clusters = dp_means(pts, DpMeansConfig{lambda, 50});
    const double base = dp_means_objective(pts, clusters, lambda);
    // Every point is assigned exactly once.
    std::vector<int> seen(pts.size(), 0);
    for (const auto& c : clusters)
      for (int i : c) ++seen[i];
    for (int s : seen) ASSERT_EQ(s, 1);
    // Move each point to every other cluster or to a new singleton.
    for (std::size_t from = 0; from < clusters.size(); ++from) {
      for (std::size_t pos = 0; pos < clusters[from].size(); ++pos) {
        for (std::size_t to = 0; to <= clusters.size(); ++to) {
          if (to == from) continue;
          auto moved = clusters;
          const int idx = moved[from][pos];
          moved[from].erase(moved[from].begin() + pos);
          if (to == clusters.size())
            moved.push_back({idx});
          else
            moved[to].push_back(idx);
          if (moved[from].empty()) moved.erase(moved.begin() + from);
          EXPECT_GE(dp_means_objective(pts, moved, lambda), base - 1e-9);
        }
      }
    }
  }
}

TEST(CircleFitting, TaubinExactPoints) {
  const auto pts = ring({2, 3}, 0.5, 8);
  const CircleFit f = taubin_fit(pts);
  EXPECT_NEAR(f.center.x, 2.0, 1e-9);
  EXPECT_NEAR(f.center.y, 3.0, 1e-9);
  EXPECT_NEAR(f.radius, 0.5, 1e-9);
  EXPECT_LT(f.residual, 1e-9);
  EXPECT_EQ(f.n_points, 8);
}

TEST(CircleFitting, TaubinThreePointsMatchCircumcircle) {
  Rng rng(42);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const Point2 a{u(rng), u(rng)}, b{u(rng), u(rng)}, c{u(rng), u(rng)};
    const double d = 2 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    if (std::abs(d) < 0.5) continue;
    const double a2 = a.squared_norm(), b2 = b.squared_norm(), c2 = c.squared_norm();
    const Point2 center{(a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
                        (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d};
    const std::vector<Point2> pts{a, b, c};
    const CircleFit f = taubin_fit(pts);
    const double scale = std::max(1.0, distance(center, a));
    EXPECT_NEAR(f.center.x, center.x, 1e-7 * scale);
    EXPECT_NEAR(f.center.y, center.y, 1e-7 * scale);
    EXPECT_NEAR(f.radius, distance(center, a), 1e-7 * scale);
  }
}

TEST(CircleFitting, DegenerateInputThrows) {
  const std::vector<Point2> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  EXPECT_THROW(taubin_fit(line), DegenerateGeometry);
  const std::vector<Point2> two{{0, 0}, {1, 0}};
  EXPECT_THROW(taubin_fit(two), DegenerateGeometry);
}

TEST(CircleFitting, RefineKeepsExactFit) {
  const auto pts = ring({1, -1}, 0.3, 20, 0.0, kPi);
  CircleFit init{{1, -1}, 0.3, 0.0, 20};
  const CircleFit f = lm_refine_circle(pts, init);
  EXPECT_NEAR(f.center.x, 1.0, 1e-12);
  EXPECT_NEAR(f.center.y, -1.0, 1e-12);
  EXPECT_NEAR(f.radius, 0.3, 1e-12);
}

TEST(CircleFitting, RefineConvergesFromPerturbedStart) {
  const auto pts = ring({1, -1}, 0.3, 20, 0.0, kPi);
  const CircleFit f = lm_refine_circle(pts, CircleFit{{1.03, -0.98}, 0.27, 0.0, 20});
  EXPECT_NEAR(f.center.x, 1.0, 1e-8);
  EXPECT_NEAR(f.center.y, -1.0, 1e-8);
  EXPECT_NEAR(f.radius, 0.3, 1e-8);
}

TEST(CircleFitting, RefineNeverWorsensNoisyArcs) {
  Rng rng(43);
  std::normal_distribution<double> n(0.0, 0.01);
  for (int trial = 0; trial < 100; ++trial) {
    auto pts = ring({5, 0}, 0.25, 25, kPi / 2, 3 * kPi / 2);
    for (auto& p : pts) p = {p.x + n(rng), p.y + n(rng)};
    const CircleFit init = taubin_fit(pts);
    const CircleFit f = lm_refine_circle(pts, init);
    EXPECT_LE(geometric_cost(pts, f.center, f.radius), geometric_cost(pts, init.center, init.radius) + 1e-15);
    EXPECT_NEAR(f.residual, circle_residual(pts, f.center, f.radius), 1e-12);
  }
}

TEST(ArcCoverage, HalfCircle) {
  const auto pts = ring({0, 5}, 0.5, 200, kPi, 2 * kPi);
  const double cov = arc_coverage(pts, CircleFit{{0, 5}, 0.5, 0.0, 200}, 0.25 * kPi / 180);
  EXPECT_NEAR(cov, 0.5, 0.05);
}

TEST(ArcCoverage, SinglePointCoversOneInterval) {
  const double res = 0.25 * kPi / 180;
  const std::vector<Point2> one{{4.5, 0.0}};
  const double cov = arc_coverage(one, CircleFit{{5, 0}, 0.5, 0.0, 1}, res);
  EXPECT_GT(cov, 0.0);
  // The interval reaches one angular step to either side; at 4.5 m a step
  // spans 4.5 * res of arc on a 0.5 m circle.
  EXPECT_NEAR(cov, 2 * 4.5 * res / 0.5 / (2 * kPi), 1e-12);
}

TEST(ArcCoverage, FullRing) {
  const auto pts = ring({0, 5}, 0.5, 400);
  EXPECT_NEAR(arc_coverage(pts, CircleFit{{0, 5}, 0.5, 0.0, 400}, 0.25 * kPi / 180), 1.0, 1e-12);
}

TEST(Detection, SingleTreeAhead) {
  Forest f;
  f.region = {-30, -30, 30, 30};
  f.trees.push_back({{5, 0}, 0.3});
  const auto dets = detect_trees(simulate_scan(f, Pose2::identity(), SensorModel{}, RngSeed{1}));
  ASSERT_EQ(dets.size(), 1u);
  EXPECT_LT(distance(dets[0].circle.center, {5, 0}), 0.02);
  EXPECT_NEAR(dets[0].circle.radius, 0.3, 0.03);
}

TEST(Detection, EmptyForestGivesNothing) {
  Forest f;
  f.region = {-30, -30, 30, 30};
  EXPECT_TRUE(detect_trees(simulate_scan(f, Pose2::identity(), SensorModel{}, RngSeed{1})).empty());
}

TEST(Detection, ZeroNoiseDetectionsAreRealTrunks) {
  Forest f = generate_forest(0.2, {-20, -20, 20, 20}, {}, RngSeed{44});
  clear_around(f, {0, 0}, 0.5);
  const auto dets = detect_trees(simulate_scan(f, Pose2::identity(), SensorModel{}, RngSeed{1}));
  ASSERT_FALSE(dets.empty());
  for (const TreeDetection& d : dets) {
    double best = 1e9;
    for (const Tree& t : f.trees) best = std::min(best, distance(d.circle.center, t.center));
    EXPECT_LT(best, 0.5);
    EXPECT_LT(d.circle.residual, DetectionThresholds{}.max_residual);
  }
}
