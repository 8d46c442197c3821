#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <queue>
#include <vector>

#include "fcslam/errors.hpp"
#include "fcslam/exploration.hpp"
#include "fcslam/mission.hpp"

using namespace fcslam;

namespace {

void set_free(OccupancyGrid2D& g, int ix, int iy) { g.add_miss(g.index(ix, iy)); }
void set_occupied(OccupancyGrid2D& g, int ix, int iy) {
  while (g.state(ix, iy) != CellState::Occupied) g.add_hit(g.index(ix, iy));
}

OccupancyGrid2D all_free(int n) {
  OccupancyGrid2D g({0, 0}, n, n, 0.1);
  for (int iy = 0; iy < n; ++iy)
    for (int ix = 0; ix < n; ++ix) set_free(g, ix, iy);
  return g;
}

std::vector<CellIndex> frontier_oracle(const OccupancyGrid2D& g) {
  std::vector<CellIndex> out;
  for (int iy = 0; iy < g.ny(); ++iy)
    for (int ix = 0; ix < g.nx(); ++ix) {
      if (g.state(ix, iy) != CellState::Free) continue;
      const bool border = (ix > 0 && g.state(ix - 1, iy) == CellState::Unknown) ||
                          (ix + 1 < g.nx() && g.state(ix + 1, iy) == CellState::Unknown) ||
                          (iy > 0 && g.state(ix, iy - 1) == CellState::Unknown) ||
                          (iy + 1 < g.ny() && g.state(ix, iy + 1) == CellState::Unknown);
      if (border) out.push_back({ix, iy});
    }
  return out;
}

// Plain Dijkstra over cells the map marks free, with the same diagonal rule.
double dijkstra_length(const TraversabilityMap& m, CellIndex s, CellIndex t) {
  const OccupancyGrid2D& g = m.grid();
  std::vector<double> d(g.size(), std::numeric_limits<double>::infinity());
  using E = std::pair<double, int>;
  std::priority_queue<E, std::vector<E>, std::greater<>> q;
  d[g.index(s.x, s.y)] = 0;
  q.push({0, static_cast<int>(g.index(s.x, s.y))});
  while (!q.empty()) {
    auto [c, u] = q.top();
    q.pop();
    if (c > d[u]) continue;
    const int ux = u % g.nx(), uy = u / g.nx();
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (!dx && !dy) continue;
        if (!m.free(ux + dx, uy + dy)) continue;
        if (dx && dy && (!m.free(ux + dx, uy) || !m.free(ux, uy + dy))) continue;
        const int v = static_cast<int>(g.index(ux + dx, uy + dy));
        const double nc = c + (dx && dy ? std::sqrt(2.0) : 1.0);
        if (nc < d[v]) {
          d[v] = nc;
          q.push({nc, v});
        }
      }
  }
  return d[g.index(t.x, t.y)];
}

MissionLog small_mission(PlannerKind planner) {
  Forest f;
  f.region = {-5, -5, 10, 10};
  AgentSpec a;
  a.region = {0, 0, 5, 5};
  a.start = make_pose(2.5, 2.5, 0.0);
  MissionConfig cfg;
  cfg.planner = planner;
  cfg.duration_cap = 120.0;
  cfg.map_range = 4.0;
  const std::vector<AgentSpec> agents{a};
  return run_mission(f, agents, cfg);
}

}  // namespace

TEST(Frontiers, UnknownGridHasNone) {
  const OccupancyGrid2D g({0, 0}, 20, 20, 0.1);
  EXPECT_TRUE(extract_frontiers(g, {0, 0, 2, 2}).empty());
}

TEST(Frontiers, FullyKnownRegionHasNone) {
  EXPECT_TRUE(extract_frontiers(all_free(20), {0, 0, 2, 2}).empty());
}

TEST(Frontiers, StraightBoundary) {
  OccupancyGrid2D g({0, 0}, 20, 20, 0.1);
  for (int iy = 0; iy < 20; ++iy)
    for (int ix = 0; ix < 10; ++ix) set_free(g, ix, iy);
  const auto f = extract_frontiers(g, {0, 0, 2, 2});
  ASSERT_EQ(f.size(), 20u);
  for (int k = 0; k < 20; ++k) EXPECT_EQ(f[k].cell, (CellIndex{9, k}));
  EXPECT_NEAR(f[3].position.x, 0.95, 1e-12);
}

TEST(Frontiers, MatchDefinitionOnRandomMaps) {
  Rng rng(101);
  std::uniform_int_distribution<int> st(0, 2);
  for (int trial = 0; trial < 30; ++trial) {
    OccupancyGrid2D g({0, 0}, 15, 12, 0.1);
    for (int iy = 0; iy < 12; ++iy)
      for (int ix = 0; ix < 15; ++ix) {
        const int s = st(rng);
        if (s == 1) set_free(g, ix, iy);
        if (s == 2) set_occupied(g, ix, iy);
      }
    const auto f = extract_frontiers(g, {0, 0, 1.5, 1.2});
    const auto expected = frontier_oracle(g);
    ASSERT_EQ(f.size(), expected.size());
    for (std::size_t k = 0; k < f.size(); ++k) EXPECT_EQ(f[k].cell, expected[k]);
  }
}

TEST(Frontiers, RegionLimitsCandidates) {
  OccupancyGrid2D g({0, 0}, 20, 20, 0.1);
  for (int iy = 0; iy < 20; ++iy)
    for (int ix = 0; ix < 10; ++ix) set_free(g, ix, iy);
  EXPECT_EQ(extract_frontiers(g, {0, 0, 2, 1}).size(), 10u);
}

TEST(Frontiers, ClustersAreEightConnected) {
  OccupancyGrid2D g({0, 0}, 20, 20, 0.1);
  std::vector<Frontier> f;
  for (CellIndex c : {CellIndex{1, 1}, CellIndex{2, 2}, CellIndex{3, 3}, CellIndex{10, 10}})
    f.push_back({c, g.cell_center(c.x, c.y)});
  const auto clusters = cluster_frontiers(g, f);
  ASSERT_EQ(clusters.size(), 2u);
  EXPECT_EQ(clusters[0].cells.size(), 3u);
  EXPECT_EQ(clusters[0].representative.cell, (CellIndex{2, 2}));
  EXPECT_EQ(clusters[1].cells.size(), 1u);
}

TEST(FrontierCost, HeadingPlusWeightedDistance) {
  EXPECT_NEAR(frontier_cost({10, 0}, Pose2::identity(), 0.5), 5.0, 1e-12);
  EXPECT_NEAR(frontier_cost({-1, 0}, Pose2::identity(), 0.5), kPi + 0.5, 1e-12);
  EXPECT_NEAR(frontier_cost({0, 2}, make_pose(0, 0, -kPi / 2), 1.0), kPi + 2.0, 1e-12);
}

TEST(FrontierSelection, ZeroLambdaPicksBestAligned) {
  Rng rng(102);
  std::uniform_real_distribution<double> u(-10, 10);
  PlannerConfig cfg;
  cfg.lambda = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Frontier> f(8);
    for (auto& x : f) x.position = {u(rng), u(rng)};
    const Pose2 v = make_pose(u(rng), u(rng), u(rng) / 3);
    int best = 0;
    double best_err = 1e9;
    for (int k = 0; k < 8; ++k) {
      const Point2 d = f[k].position - v.translation();
      const double err = std::abs(normalize_angle(std::atan2(d.y, d.x) - v.theta));
      if (err < best_err) best_err = err, best = k;
    }
    EXPECT_EQ(select_frontier(f, v, cfg).index, best);
  }
}

TEST(FrontierSelection, SingleCandidateIsChosen) {
  const std::vector<Frontier> f{{{3, 4}, {1, 1}}};
  const FrontierChoice c = select_frontier(f, Pose2::identity(), PlannerConfig{});
  EXPECT_EQ(c.index, 0);
  EXPECT_EQ(c.frontier.cell, (CellIndex{3, 4}));
}

TEST(FrontierSelection, HysteresisKeepsActive) {
  // Active costs 10 (dead ahead, 20 m); challenger costs 9.9.
  const Frontier active{{0, 0}, {20, 0}};
  const std::vector<Frontier> f{{{1, 1}, {19.8, 0}}};
  const FrontierChoice keep = select_frontier(f, Pose2::identity(), PlannerConfig{}, active);
  EXPECT_FALSE(keep.switched);
  EXPECT_EQ(keep.index, -1);
  EXPECT_EQ(keep.frontier.cell, active.cell);
  const std::vector<Frontier> g{{{1, 1}, {10, 0}}};
  EXPECT_TRUE(select_frontier(g, Pose2::identity(), PlannerConfig{}, active).switched);
}

TEST(FrontierSelection, EmptyListThrows) {
  EXPECT_THROW(select_frontier({}, Pose2::identity(), PlannerConfig{}), NoFrontiers);
  EXPECT_THROW(select_closest_frontier({}, Pose2::identity()), NoFrontiers);
}

TEST(FrontierSelection, ClosestIgnoresHeading) {
  const std::vector<Frontier> f{{{0, 0}, {5, 0}}, {{1, 0}, {-2, 0}}};
  EXPECT_EQ(select_closest_frontier(f, Pose2::identity()).index, 1);
  EXPECT_EQ(select_frontier(f, Pose2::identity(), PlannerConfig{}).index, 0);
}

TEST(Astar, OpenFieldStraightLine) {
  const OccupancyGrid2D g = all_free(30);
  const auto path = astar_plan(g, {2, 2}, {20, 10}, 0.0);
  EXPECT_EQ(path.front(), (CellIndex{2, 2}));
  EXPECT_EQ(path.back(), (CellIndex{20, 10}));
  EXPECT_NEAR(path_length_cells(path), 8 * std::sqrt(2.0) + 10, 1e-12);
}

TEST(Astar, DetourMatchesDijkstra) {
  Rng rng(103);
  std::uniform_int_distribution<int> c(0, 39);
  for (int trial = 0; trial < 20; ++trial) {
    OccupancyGrid2D g = all_free(40);
    for (int iy = 5; iy < 35; ++iy) set_occupied(g, 20, iy);
    for (int k = 0; k < 25; ++k) set_occupied(g, c(rng), c(rng));
    const TraversabilityMap m(g, 0.15);
    const CellIndex s{3, 20}, t{36, 20};
    if (!m.free(s.x, s.y) || !m.free(t.x, t.y)) continue;
    const double oracle = dijkstra_length(m, s, t);
    if (std::isinf(oracle)) {
      EXPECT_THROW(astar_plan(m, s, t), NoPath);
    } else {
      const auto path = astar_plan(m, s, t);
      EXPECT_NEAR(path_length_cells(path), oracle, 1e-9);
      for (const CellIndex& p : path) EXPECT_TRUE(m.free(p.x, p.y));
    }
  }
}

TEST(Astar, GoalInsideInflationThrows) {
  OccupancyGrid2D g = all_free(30);
  set_occupied(g, 15, 15);
  EXPECT_THROW(astar_plan(g, {2, 2}, {16, 15}, 0.3), NoPath);
}

TEST(Astar, BlockedStartNeedsEscapeOption) {
  OccupancyGrid2D g = all_free(30);
  set_occupied(g, 10, 10);
  EXPECT_THROW(astar_plan(g, {11, 10}, {25, 25}, 0.3), NoPath);
  AstarOptions opt;
  opt.allow_blocked_start = true;
  const auto path = astar_plan(g, {11, 10}, {25, 25}, 0.3, opt);
  EXPECT_EQ(path.back(), (CellIndex{25, 25}));
}

TEST(Traversability, BorderInflation) {
  const OccupancyGrid2D g = all_free(10);
  const TraversabilityMap plain(g, 0.25), border(g, 0.25, true);
  EXPECT_TRUE(plain.free(0, 5));
  EXPECT_FALSE(border.free(0, 5));
  EXPECT_FALSE(border.free(1, 5));
  EXPECT_TRUE(border.free(2, 5));
  EXPECT_EQ(border.inflation_cells(), 3);
}

TEST(Mission, SmallEmptyRegionCompletesWithBothPlanners) {
  for (PlannerKind p : {PlannerKind::Proposed, PlannerKind::Baseline}) {
    const MissionLog log = small_mission(p);
    ASSERT_EQ(log.agents.size(), 1u);
    const AgentLog& a = log.agents[0];
    EXPECT_TRUE(a.completed) << to_string(p);
    EXPECT_FALSE(log.duration_exceeded);
    ASSERT_FALSE(a.coverage.empty());
    EXPECT_GE(a.coverage.back().fraction, 0.99);
    EXPECT_EQ(a.truth.size(), a.stamps.size());
  }
}

TEST(Mission, ReplayIsIdentical) {
  Forest f = generate_forest(0.1, {-5, -5, 15, 15}, {}, RngSeed{7});
  clear_around(f, {5, 5}, 1.0);
  AgentSpec a;
  a.region = {0, 0, 10, 10};
  a.start = make_pose(5, 5, 0.0);
  MissionConfig cfg;
  cfg.duration_cap = 40.0;
  cfg.drift.translation_sigma = 0.001;
  cfg.seed = RngSeed{3};
  const std::vector<AgentSpec> agents{a};
  const MissionLog x = run_mission(f, agents, cfg), y = run_mission(f, agents, cfg);
  ASSERT_EQ(x.agents[0].truth.size(), y.agents[0].truth.size());
  for (std::size_t k = 0; k < x.agents[0].truth.size(); ++k) {
    EXPECT_EQ(x.agents[0].truth[k], y.agents[0].truth[k]);
    EXPECT_EQ(x.agents[0].odom[k], y.agents[0].odom[k]);
  }
  ASSERT_EQ(x.queue.size(), y.queue.size());
  for (std::size_t k = 0; k < x.queue.size(); ++k) EXPECT_EQ(x.queue[k].bytes, y.queue[k].bytes);
}

TEST(Mission, PlannerNamesRoundTrip) {
  EXPECT_EQ(parse_planner("baseline"), PlannerKind::Baseline);
  EXPECT_EQ(to_string(PlannerKind::Proposed), "proposed");
  EXPECT_THROW(parse_planner("random"), InvalidArgument);
}
