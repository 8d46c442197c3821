#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <vector>

#include "fcslam/errors.hpp"
#include "fcslam/slam.hpp"

using namespace fcslam;

namespace {

// Two agents driving loops through a shared landmark field. Submap origins
// are exact odometry in each agent's own frame; observations are exact.
struct World {
  std::vector<Point2> landmarks;
  std::vector<Pose2> truth;  // world poses per submap
  std::vector<Submap> submaps;
  GlobalAssociation assoc;
  std::vector<LoopClosure> closures;
};

World make_world(Rng& rng, int agents, int per_agent, double range = 8.0) {
  std::uniform_real_distribution<double> u(-12.0, 12.0);
  World w;
  for (int i = 0; i < 60; ++i) w.landmarks.push_back({u(rng), u(rng)});
  std::map<int, int> universe;  // landmark -> compact universe id
  for (int a = 0; a < agents; ++a) {
    const Pose2 start = make_pose(-6.0 + 3.0 * a, -4.0 + a, 0.3 * a);
    for (int k = 0; k < per_agent; ++k) {
      const Pose2 p = se2_compose(start, make_pose(1.5 * k, 0.4 * k * (a ? -1 : 1), 0.15 * k));
      Submap s;
      s.id = {a, k};
      s.origin = se2_between(start, p);
      s.open = false;
      std::vector<int> ids;
      for (int l = 0; l < static_cast<int>(w.landmarks.size()); ++l)
        if (distance(p.translation(), w.landmarks[l]) < range) {
          s.trees.push_back({static_cast<int>(s.trees.size()), se2_apply_inverse(p, w.landmarks[l]), 0.2, 5});
          ids.push_back(universe.try_emplace(l, static_cast<int>(universe.size())).first->second);
        }
      w.truth.push_back(p);
      w.submaps.push_back(s);
      w.assoc.maps.push_back(ids);
    }
  }
  w.assoc.universe_size = static_cast<int>(universe.size());
  std::vector<Point2> compact(universe.size());
  for (auto [l, c] : universe) compact[c] = w.landmarks[l];
  w.landmarks = compact;
  for (int a = 1; a < agents; ++a) {
    const int s = 0, t = a * per_agent;
    w.closures.push_back({s, t, se2_between(w.truth[s], w.truth[t])});
  }
  return w;
}

FactorGraph unit_weight_graph(const World& w) {
  SlamConfig cfg;
  cfg.odom_sigma_xy = 1.0;
  cfg.odom_sigma_theta = 1.0;
  cfg.observation_sigma = 1.0;
  cfg.anchor_information = 1.0;
  return build_graph(w.submaps, w.assoc, w.closures, cfg);
}

}  // namespace

TEST(BuildGraph, SingleAgentChainWithoutLandmarks) {
  std::vector<Submap> submaps(3);
  for (int k = 0; k < 3; ++k) {
    submaps[k].id = {0, k};
    submaps[k].origin = make_pose(k, 0.5 * k, 0.1 * k);
  }
  GlobalAssociation assoc;
  assoc.maps.resize(3);
  const FactorGraph g = build_graph(submaps, assoc, {});
  EXPECT_EQ(g.odometry.size(), 2u);
  EXPECT_TRUE(g.observations.empty());
  EXPECT_EQ(g.priors.size(), 1u);
  for (int k = 0; k < 3; ++k) EXPECT_EQ(g.poses[k], submaps[k].origin);
  const OptimizeResult r = optimize(g);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(distance(r.poses[k].translation(), submaps[k].origin.translation()), 0, 1e-9);
}

TEST(BuildGraph, SharedTreeGivesTwoObservationsOfOneLandmark) {
  std::vector<Submap> submaps(2);
  for (int k = 0; k < 2; ++k) {
    submaps[k].id = {0, k};
    submaps[k].origin = make_pose(k, 0, 0);
    submaps[k].trees.push_back({0, {3.0 - k, 1.0}, 0.2, 4});
  }
  GlobalAssociation assoc{1, {{0}, {0}}};
  const FactorGraph g = build_graph(submaps, assoc, {});
  ASSERT_EQ(g.observations.size(), 2u);
  EXPECT_EQ(g.observations[0].landmark, 0);
  EXPECT_EQ(g.observations[1].landmark, 0);
  EXPECT_EQ(g.landmarks.size(), 1u);
  EXPECT_NEAR(g.landmarks[0].x, 3.0, 1e-12);
}

TEST(BuildGraph, LoopClosureJoinsAgents) {
  Rng rng(91);
  const World w = make_world(rng, 2, 4);
  const FactorGraph g = build_graph(w.submaps, w.assoc, w.closures);
  EXPECT_EQ(g.component_count(), 1);
  EXPECT_EQ(g.priors.size(), 1u);
  EXPECT_TRUE(g.unaligned_agents.empty());
  // The second agent is placed in the first agent's frame through the closure.
  const Pose2 offset = w.truth[0];
  for (std::size_t k = 0; k < w.truth.size(); ++k) {
    const Pose2 expected = se2_between(offset, w.truth[k]);
    EXPECT_NEAR(g.poses[k].x, expected.x, 1e-9);
    EXPECT_NEAR(g.poses[k].y, expected.y, 1e-9);
  }
}

TEST(BuildGraph, UnlinkedAgentGetsItsOwnAnchor) {
  std::vector<Submap> submaps(4);
  for (int k = 0; k < 4; ++k) {
    submaps[k].id = {k / 2, k % 2};
    submaps[k].origin = make_pose(k % 2, 0, 0);
  }
  GlobalAssociation assoc;
  assoc.maps.resize(4);
  const FactorGraph g = build_graph(submaps, assoc, {});
  EXPECT_EQ(g.component_count(), 2);
  EXPECT_EQ(g.priors.size(), 2u);
  EXPECT_EQ(g.unaligned_agents, (std::vector<int>{1}));
}

TEST(BuildGraph, SizeMismatchThrows) {
  std::vector<Submap> submaps(1);
  submaps[0].trees.push_back({0, {1, 1}, 0.2, 3});
  GlobalAssociation assoc{1, {{}}};
  EXPECT_THROW(build_graph(submaps, assoc, {}), InconsistentSizes);
}

TEST(Residuals, ZeroAtTruthWithExactMeasurements) {
  Rng rng(92);
  const World w = make_world(rng, 2, 4);
  const FactorGraph g = build_graph(w.submaps, w.assoc, w.closures);
  EXPECT_LT(residual_and_jacobian(g, g.poses, g.landmarks).residual.norm(), 1e-9);
  EXPECT_LT(graph_cost(g, g.poses, g.landmarks), 1e-18);
}

TEST(Residuals, SingleOdometryFactorIsPoseDifference) {
  FactorGraph g;
  g.poses = {Pose2::identity(), make_pose(0.3, -0.2, 0.1)};
  g.pose_ids = {{0, 0}, {0, 1}};
  g.component = {0, 0};
  g.odometry.push_back({0, 1, Pose2::identity(), Eigen::Matrix3d::Identity()});
  const Linearization lin = residual_and_jacobian(g, g.poses, g.landmarks);
  ASSERT_EQ(lin.residual.size(), 3);
  EXPECT_NEAR(lin.residual(0), 0.3, 1e-15);
  EXPECT_NEAR(lin.residual(1), -0.2, 1e-15);
  EXPECT_NEAR(lin.residual(2), 0.1, 1e-15);
}

TEST(Residuals, JacobianMatchesCentralDifferences) {
  Rng rng(93);
  std::normal_distribution<double> n(0.0, 0.3);
  for (int trial = 0; trial < 5; ++trial) {
    const World w = make_world(rng, 2, 3);
    const FactorGraph g = unit_weight_graph(w);
    std::vector<Pose2> poses = g.poses;
    std::vector<Point2> lms = g.landmarks;
    for (auto& p : poses) p = make_pose(p.x + n(rng), p.y + n(rng), p.theta + n(rng));
    for (auto& l : lms) l = {l.x + n(rng), l.y + n(rng)};
    const Eigen::MatrixXd jac = Eigen::MatrixXd(residual_and_jacobian(g, poses, lms).jacobian);
    const double h = 1e-6;
    double worst = 0.0;
    for (int v = 0; v < g.variable_count(); ++v) {
      auto shifted = [&](double d) {
        std::vector<Pose2> p = poses;
        std::vector<Point2> l = lms;
        const int np = 3 * static_cast<int>(p.size());
        if (v < np) {
          Pose2& q = p[v / 3];
          if (v % 3 == 0) q.x += d;
          if (v % 3 == 1) q.y += d;
          if (v % 3 == 2) q.theta = normalize_angle(q.theta + d);
        } else {
          Point2& q = l[(v - np) / 2];
          ((v - np) % 2 == 0 ? q.x : q.y) += d;
        }
        return residual_and_jacobian(g, p, l).residual;
      };
      const Eigen::VectorXd fd = (shifted(h) - shifted(-h)) / (2 * h);
      worst = std::max(worst, (fd - jac.col(v)).cwiseAbs().maxCoeff());
    }
    EXPECT_LT(worst, 1e-5);
  }
}

TEST(Optimize, RecoversTruthFromPerturbedStart) {
  Rng rng(94);
  std::uniform_real_distribution<double> dp(-0.2, 0.2), da(-0.1, 0.1);
  const World w = make_world(rng, 2, 5);
  FactorGraph g = build_graph(w.submaps, w.assoc, w.closures);
  const std::vector<Pose2> exact = g.poses;
  const std::vector<Point2> exact_lm = g.landmarks;
  for (std::size_t k = 1; k < g.poses.size(); ++k)
    g.poses[k] = make_pose(g.poses[k].x + dp(rng), g.poses[k].y + dp(rng), g.poses[k].theta + da(rng));
  for (auto& l : g.landmarks) l = {l.x + dp(rng), l.y + dp(rng)};
  const OptimizeResult r = optimize(g);
  for (std::size_t k = 0; k < exact.size(); ++k) {
    EXPECT_NEAR(r.poses[k].x, exact[k].x, 1e-6);
    EXPECT_NEAR(r.poses[k].y, exact[k].y, 1e-6);
    EXPECT_NEAR(normalize_angle(r.poses[k].theta - exact[k].theta), 0.0, 1e-6);
  }
  for (std::size_t l = 0; l < exact_lm.size(); ++l) EXPECT_LT(distance(r.landmarks[l], exact_lm[l]), 1e-6);
}

TEST(Optimize, CostNeverIncreasesOnNoisyData) {
  Rng rng(95);
  std::normal_distribution<double> n(0.0, 0.05);
  World w = make_world(rng, 2, 6);
  for (auto& s : w.submaps) {
    s.origin = make_pose(s.origin.x + n(rng), s.origin.y + n(rng), s.origin.theta + 0.2 * n(rng));
    for (auto& t : s.trees) t.position = {t.position.x + n(rng), t.position.y + n(rng)};
  }
  const OptimizeResult r = optimize(build_graph(w.submaps, w.assoc, w.closures));
  ASSERT_FALSE(r.cost_log.empty());
  double previous = r.initial_cost;
  for (double c : r.cost_log) {
    EXPECT_LE(c, previous);
    previous = c;
  }
  EXPECT_EQ(r.final_cost, r.cost_log.back());
  EXPECT_LE(r.iterations, LmConfig{}.max_iterations);
  EXPECT_FALSE(r.stop_reason.empty());
}

TEST(Ate, IdenticalAndShifted) {
  const std::vector<Pose2> a{make_pose(0, 0, 0), make_pose(1, 0, 0.2), make_pose(2, 1, 0.5)};
  std::vector<Pose2> b = a;
  EXPECT_EQ(ate(a, b, false), 0.0);
  for (auto& p : b) p.x += 1.0;
  EXPECT_NEAR(ate(b, a, false), 1.0, 1e-12);
  EXPECT_NEAR(ate(b, a, true), 0.0, 1e-12);
}

TEST(Ate, RawMatchesPerPoseAverage) {
  Rng rng(96);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Pose2> a(15), b(15);
    double sum = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
      a[k] = make_pose(u(rng), u(rng), 0);
      b[k] = make_pose(u(rng), u(rng), 0);
      sum += distance(a[k].translation(), b[k].translation());
    }
    EXPECT_NEAR(ate(a, b, false), sum / a.size(), 1e-12);
    EXPECT_LE(ate(a, b, true), ate(a, b, false) + 1e-12);
    // Alignment removes any rigid motion of the estimate.
    std::vector<Pose2> moved;
    for (const Pose2& p : a) moved.push_back(se2_compose(make_pose(3, -2, 1.1), p));
    EXPECT_NEAR(ate(moved, b, true), ate(a, b, true), 1e-9);
  }
}

TEST(Ate, LengthMismatchThrows) {
  const std::vector<Pose2> a(2), b(3);
  EXPECT_THROW(ate(a, b, true), LengthMismatch);
}
