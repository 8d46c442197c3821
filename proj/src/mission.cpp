#include "fcslam/mission.hpp"

#include <algorithm>
#include <deque>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

#include "fcslam/errors.hpp"
#include "fcslam/occupancy.hpp"

namespace fcslam {

PlannerKind parse_planner(const std::string& s) {
  if (s == "proposed") return PlannerKind::Proposed;
  if (s == "baseline") return PlannerKind::Baseline;
  throw InvalidArgument("unknown planner '" + s + "' (expected proposed or baseline)");
}

std::string to_string(PlannerKind k) { return k == PlannerKind::Proposed ? "proposed" : "baseline"; }

namespace {

std::vector<std::uint8_t> free_space_mask(const OccupancyGrid2D& grid, const Forest& forest, const Region& region) {
  std::vector<std::uint8_t> mask(grid.size(), 0);
  for (int iy = 0; iy < grid.ny(); ++iy)
    for (int ix = 0; ix < grid.nx(); ++ix) {
      const Point2 c = grid.cell_center(ix, iy);
      if (!region.contains(c)) continue;
      bool inside = false;
      for (const Tree& t : forest.trees)
        if (distance(t.center, c) < t.radius) {
          inside = true;
          break;
        }
      mask[grid.index(ix, iy)] = !inside;
    }
  return mask;
}

double masked_coverage(const OccupancyGrid2D& grid, const std::vector<std::uint8_t>& mask) {
  std::size_t total = 0, known = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    ++total;
    known += grid.state(i) != CellState::Unknown;
  }
  return total == 0 ? 1.0 : static_cast<double>(known) / static_cast<double>(total);
}

struct Agent {
  AgentSpec spec;
  VehicleState truth;
  Pose2 odom;
  OccupancyGrid2D grid;
  std::vector<std::uint8_t> mask;
  std::optional<SubmapLifecycle> lifecycle;
  std::vector<Point2> prev_points;
  Pose2 last_increment;
  Rng drift_rng;
  std::optional<Frontier> active;
  std::optional<TraversabilityMap> trav;  // inflated map of the last plan
  std::vector<Point2> path;
  std::vector<Point2> blacklist;
  std::size_t waypoint = 0;
  bool done = false;
  double moving_time = 0.0;
  AgentLog log;
};

bool blacklisted(const Agent& a, const Point2& p) {
  for (const Point2& b : a.blacklist)
    if (distance(b, p) < 0.75) return true;
  return false;
}

CellIndex clamp_cell(const OccupancyGrid2D& g, const Point2& p) {
  const int ix = static_cast<int>(std::floor((p.x - g.origin().x) / g.resolution()));
  const int iy = static_cast<int>(std::floor((p.y - g.origin().y) / g.resolution()));
  return {std::clamp(ix, 0, g.nx() - 1), std::clamp(iy, 0, g.ny() - 1)};
}

// A* from the vehicle cell. Trunks resolved late can box the vehicle into
// their inflation margins, so a failed search is repeated once with half the
// clearance before the goal is given up.
std::vector<CellIndex> plan_path(const TraversabilityMap& trav, CellIndex start, CellIndex goal,
                                 const MissionConfig& cfg) {
  try {
    return astar_plan(trav, start, goal, {.allow_blocked_start = true});
  } catch (const NoPath&) {
  }
  try {
    const TraversabilityMap tight(trav.grid(), 0.5 * cfg.planner_cfg.safety_radius, true);
    return astar_plan(tight, start, goal, {.allow_blocked_start = true});
  } catch (const NoPath&) {
    if (trav.free(start.x, start.y)) throw;
  }
  // Last resort from a blocked start: breadth-first through cells not known
  // to be OCCUPIED, planning from each traversable cell met on the way until
  // one connects to the goal.
  const OccupancyGrid2D& g = trav.grid();
  std::vector<int> parent(g.size(), -2);
  std::deque<std::size_t> queue{g.index(start.x, start.y)};
  parent[queue.front()] = -1;
  int exits = 0;
  while (!queue.empty() && exits < 32) {
    const std::size_t u = queue.front();
    queue.pop_front();
    const int ux = static_cast<int>(u % g.nx()), uy = static_cast<int>(u / g.nx());
    if (trav.free(ux, uy)) {
      ++exits;
      try {
        std::vector<CellIndex> path = astar_plan(trav, {ux, uy}, goal);
        for (int v = parent[u]; v >= 0; v = parent[v]) path.insert(path.begin(), {v % g.nx(), v / g.nx()});
        return path;
      } catch (const NoPath&) {
        continue;  // a free pocket; its neighbours are not explored further
      }
    }
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int x = ux + dx, y = uy + dy;
        if (!g.in_bounds(x, y) || g.state(x, y) == CellState::Occupied) continue;
        const std::size_t v = g.index(x, y);
        if (parent[v] != -2) continue;
        parent[v] = static_cast<int>(u);
        queue.push_back(v);
      }
  }
  throw NoPath("no traversable cell reachable from the start");
}

// Route mode: A* towards the traversable cell closest to the current
// waypoint; waypoints are taken in a cycle.
void plan_route(Agent& a, const Pose2& est, const MissionConfig& cfg) {
  const TraversabilityMap& trav = a.trav.emplace(a.grid, cfg.planner_cfg.safety_radius, true);
  const CellIndex start = clamp_cell(a.grid, est.translation());
  for (std::size_t tries = 0; tries < a.spec.route.size(); ++tries) {
    const Point2 wp = a.spec.route[a.waypoint];
    if (distance(wp, est.translation()) < 2.0 * cfg.arrive_radius) {
      a.waypoint = (a.waypoint + 1) % a.spec.route.size();
      continue;
    }
    CellIndex goal{-1, -1};
    double best = std::numeric_limits<double>::infinity();
    for (int iy = 0; iy < a.grid.ny(); ++iy)
      for (int ix = 0; ix < a.grid.nx(); ++ix) {
        if (!trav.free(ix, iy)) continue;
        const double d = distance(a.grid.cell_center(ix, iy), wp);
        if (d < best) {
          best = d;
          goal = {ix, iy};
        }
      }
    if (goal.x < 0 || (goal.x == start.x && goal.y == start.y)) {
      a.waypoint = (a.waypoint + 1) % a.spec.route.size();
      continue;
    }
    try {
      const std::vector<CellIndex> cells = plan_path(trav, start, goal, cfg);
      a.path.clear();
      for (const CellIndex& c : cells) a.path.push_back(a.grid.cell_center(c.x, c.y));
      ++a.log.replans;
      return;
    } catch (const NoPath&) {
      ++a.log.unreachable;
      a.waypoint = (a.waypoint + 1) % a.spec.route.size();
    }
  }
  a.path.clear();
}

// Frontier selection and A* for one agent. Returns false when the agent has
// nothing left to explore.
bool plan(Agent& a, const Pose2& est, const MissionConfig& cfg) {
  // Frontier cells inside the inflation margin can never be goals.
  const TraversabilityMap& trav = a.trav.emplace(a.grid, cfg.planner_cfg.safety_radius, true);
  std::vector<Frontier> frontiers = extract_frontiers(a.grid, a.spec.region);
  std::erase_if(frontiers, [&](const Frontier& f) { return !trav.free(f.cell.x, f.cell.y); });
  std::vector<Frontier> cands;
  for (const FrontierCluster& c : cluster_frontiers(a.grid, frontiers))
    if (static_cast<int>(c.cells.size()) >= cfg.min_frontier_cells && !blacklisted(a, c.representative.position))
      cands.push_back(c.representative);

  if (a.active) {
    std::optional<Frontier> refreshed;
    double best = 1.0;
    for (const Frontier& f : cands) {
      const double d = distance(f.position, a.active->position);
      if (d < best) {
        best = d;
        refreshed = f;
      }
    }
    a.active = refreshed;
    if (a.active && distance(a.active->position, est.translation()) < cfg.arrive_radius) {
      a.blacklist.push_back(a.active->position);
      a.active.reset();
      std::erase_if(cands, [&](const Frontier& f) { return blacklisted(a, f.position); });
    }
  }
  if (cands.empty()) return false;

  const CellIndex start = clamp_cell(a.grid, est.translation());
  for (int attempt = 0; attempt < 8 && !cands.empty(); ++attempt) {
    Frontier goal;
    if (cfg.planner == PlannerKind::Proposed) {
      goal = select_frontier(cands, est, cfg.planner_cfg, a.active).frontier;
    } else {
      goal = a.active ? *a.active : select_closest_frontier(cands, est).frontier;
    }
    try {
      const std::vector<CellIndex> cells = plan_path(trav, start, goal.cell, cfg);
      a.path.clear();
      for (const CellIndex& c : cells) a.path.push_back(a.grid.cell_center(c.x, c.y));
      a.active = goal;
      ++a.log.replans;
      return true;
    } catch (const NoPath&) {
      ++a.log.unreachable;
      a.blacklist.push_back(goal.position);
      a.active.reset();
      std::erase_if(cands, [&](const Frontier& f) { return blacklisted(a, f.position); });
    }
  }
  a.path.clear();
  return !cands.empty() || a.active.has_value();
}

// Straight segment that keeps the planner's clearance. Blocked cells are
// accepted only at the start of the segment, while the vehicle is still
// leaving the inflation margin it ended up in.
bool line_of_sight(const TraversabilityMap& trav, const Point2& a, const Point2& b) {
  bool leaving = true;
  for (const CellIndex& c : trace_cells(trav.grid(), a, b)) {
    if (trav.grid().state(c.x, c.y) == CellState::Occupied) return false;
    if (trav.free(c.x, c.y))
      leaving = false;
    else if (!leaving)
      return false;
  }
  return true;
}

VehicleCommand follow(Agent& a, const Pose2& est, const MissionConfig& cfg) {
  if (a.path.empty()) return {0.0, est.theta};
  const Point2 here = est.translation();
  // Drop waypoints already passed, then aim at the farthest waypoint within
  // the lookahead distance that can be reached in a straight line.
  std::size_t nearest = 0;
  double nd = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < a.path.size(); ++k) {
    const double d = distance(a.path[k], here);
    if (d < nd) {
      nd = d;
      nearest = k;
    }
  }
  a.path.erase(a.path.begin(), a.path.begin() + static_cast<std::ptrdiff_t>(nearest));
  Point2 target = a.path[std::min<std::size_t>(1, a.path.size() - 1)];
  for (std::size_t k = 1; k < a.path.size(); ++k) {
    if (!a.trav || !line_of_sight(*a.trav, here, a.path[k])) break;
    target = a.path[k];
    if (distance(a.path[k], here) >= cfg.lookahead) break;
  }
  const double dx = target.x - est.x, dy = target.y - est.y;
  if (std::hypot(dx, dy) < 1e-9) return {0.0, est.theta};
  const double heading = std::atan2(dy, dx);
  const double err = std::abs(normalize_angle(heading - est.theta));
  const double speed = cfg.cruise_speed * std::max(0.0, 1.0 - err / cfg.full_turn_angle);
  return {speed, heading};
}

void emit(Agent& a, Submap&& s, double t, MissionLog& log) {
  SubmapMessage msg;
  msg.stamp = t;
  msg.agent = a.spec.id;
  msg.bytes = encode_submap(s);
  log.queue.push_back(std::move(msg));
  a.log.submaps.push_back(std::move(s));
}

}  // namespace

double coverage_fraction(const OccupancyGrid2D& grid, const Forest& forest, const Region& region) {
  return masked_coverage(grid, free_space_mask(grid, forest, region));
}

MissionLog run_mission(const Forest& forest, std::span<const AgentSpec> specs, const MissionConfig& cfg) {
  if (!(cfg.dt > 0.0) || cfg.map_every < 1 || cfg.plan_every < 1 || cfg.detect_every < 1)
    throw InvalidArgument("invalid mission timing");
  const ForestView view(forest);
  std::vector<Agent> agents;
  agents.reserve(specs.size());
  for (const AgentSpec& spec : specs) {
    if (spec.id < 0 || spec.id > 255) throw InvalidArgument("agent id must fit in a byte");
    Agent a;
    a.spec = spec;
    a.truth.pose = spec.start;
    // The map extends past the search region so obstacles just outside it
    // are still avoided.
    const Region padded{spec.region.xmin - cfg.map_margin, spec.region.ymin - cfg.map_margin,
                        spec.region.xmax + cfg.map_margin, spec.region.ymax + cfg.map_margin};
    a.grid = OccupancyGrid2D::covering(padded, cfg.grid_resolution);
    a.mask = free_space_mask(a.grid, forest, spec.region);
    if (cfg.build_submaps) a.lifecycle.emplace(spec.id, cfg.submap);
    a.drift_rng = make_rng(derive_seed(cfg.seed, "drift", static_cast<std::uint64_t>(spec.id)));
    a.log.agent = spec.id;
    a.log.spec = spec;
    agents.push_back(std::move(a));
  }

  MissionLog log;
  const long long max_ticks = static_cast<long long>(std::ceil(cfg.duration_cap / cfg.dt - 1e-9));
  long long k = 0;
  for (; k < max_ticks; ++k) {
    const double t = static_cast<double>(k) * cfg.dt;
    bool any_active = false;
    for (Agent& a : agents) {
      if (a.done) continue;
      any_active = true;
      const std::uint64_t stream = (static_cast<std::uint64_t>(a.spec.id) << 40) | static_cast<std::uint64_t>(k);
      Scan scan = simulate_scan(view, a.truth.pose, cfg.sensor, derive_seed(cfg.seed, "scan", stream));
      scan.id = static_cast<std::uint64_t>(k);
      scan.stamp = t;

      // Odometry.
      std::vector<Point2> points;
      if (cfg.odometry == OdometrySource::Icp) points = scan_to_points(scan);
      if (k > 0) {
        const Pose2 truth_inc = se2_between(a.log.truth.back(), a.truth.pose);
        Pose2 inc = truth_inc;
        if (cfg.odometry == OdometrySource::Icp) {
          inc = a.last_increment;
          if (!a.prev_points.empty() && points.size() >= 3) {
            try {
              const IcpResult r = icp_align(a.prev_points, points, a.last_increment, cfg.icp);
              if (r.reliable) inc = r.transform;
            } catch (const DegenerateGeometry&) {
            }
          }
        }
        a.last_increment = inc;
        a.odom = se2_compose(a.odom, corrupt_odometry(inc, cfg.drift, a.drift_rng));
      }
      if (cfg.odometry == OdometrySource::Icp) a.prev_points = std::move(points);
      const Pose2 est = se2_compose(a.spec.start, a.odom);

      // Submaps.
      if (a.lifecycle) {
        const std::size_t opened = a.lifecycle->origins().size();
        if (auto done = a.lifecycle->advance(t, a.odom)) emit(a, std::move(*done), t, log);
        if (a.lifecycle->origins().size() != opened) a.log.submap_truth.push_back(a.truth.pose);
        if (k % cfg.detect_every == 0) {
          auto dets = detect_trees(scan, cfg.dp, cfg.gates);
          std::erase_if(dets, [&](const TreeDetection& d) { return d.circle.center.norm() > cfg.detection_range; });
          update_submap(a.lifecycle->current(), dets, a.lifecycle->sensor_in_submap(a.odom), cfg.submap.tracking);
          if (a.lifecycle->current().occupancy.size() > 0)
            update_occupancy(a.lifecycle->current().occupancy, scan, a.lifecycle->sensor_in_submap(a.odom),
                             cfg.map_range);
        }
      }

      if (k % cfg.map_every == 0) update_occupancy(a.grid, scan, est, cfg.map_range);

      a.log.stamps.push_back(t);
      a.log.truth.push_back(a.truth.pose);
      a.log.odom.push_back(a.odom);
      a.log.submap_index.push_back(a.lifecycle ? a.lifecycle->current().id.sequence : 0);
      if (k % 10 == 0) a.log.coverage.push_back({t, masked_coverage(a.grid, a.mask)});

      if (!a.spec.route.empty()) {
        if (k % cfg.plan_every == 0 || a.path.empty()) plan_route(a, est, cfg);
      } else if (k % cfg.plan_every == 0 || a.path.empty()) {
        if (!plan(a, est, cfg)) {
          a.done = true;
          a.log.completed = true;
          a.log.completion_time = t;
          a.log.coverage.push_back({t, masked_coverage(a.grid, a.mask)});
          if (a.lifecycle)
            if (auto last = a.lifecycle->finish()) emit(a, std::move(*last), t, log);
          continue;
        }
      }

      const VehicleCommand cmd = follow(a, est, cfg);
      // The controller works on the estimate; apply the same relative turn to
      // the true vehicle.
      VehicleCommand truth_cmd{cmd.speed, a.truth.pose.theta + normalize_angle(cmd.heading - est.theta)};
      VehicleState next = step_vehicle(a.truth, truth_cmd, cfg.dt, cfg.limits);
      // Geofence: the vehicle stays inside the extent of its map.
      auto fence = [&](Point2 p) {
        const OccupancyGrid2D& g = a.grid;
        const double h = 0.5 * g.resolution();
        p.x = std::clamp(p.x, g.origin().x + h, g.origin().x + g.nx() * g.resolution() - h);
        p.y = std::clamp(p.y, g.origin().y + h, g.origin().y + g.ny() * g.resolution() - h);
        return p;
      };
      // A step may not bring the vehicle closer to a trunk it is touching.
      // The inward part of such a step is removed so the vehicle slides
      // along the trunk; it stops only if that still collides.
      auto touching = [&](const Point2& p) -> const Tree* {
        for (const Tree& tr : forest.trees)
          if (const double d = distance(tr.center, p);
              d < tr.radius + 0.05 && d < distance(tr.center, a.truth.pose.translation()))
            return &tr;
        return nullptr;
      };
      const Point2 here = a.truth.pose.translation();
      Point2 target = fence(next.pose.translation());
      if (const Tree* tr = touching(target)) {
        Point2 n = here - tr->center;
        n = n * (1.0 / std::max(n.norm(), 1e-12));
        // The contact is felt: the map cell one step past the touched surface
        // point is marked, carried into the estimate frame by the current
        // pose error.
        const Point2 felt = tr->center + n * (tr->radius - a.grid.resolution());
        const Point2 contact = se2_apply(est, se2_apply_inverse(a.truth.pose, felt));
        if (const auto c = a.grid.cell_of(contact))
          for (int hits = 0; hits < 8 && a.grid.state(c->x, c->y) != CellState::Occupied; ++hits)
            a.grid.add_hit(a.grid.index(c->x, c->y));
        const Point2 wanted = target - here;
        const double step = wanted.norm();
        const double inward = wanted.x * n.x + wanted.y * n.y;
        const Point2 slide = inward < 0.0 ? wanted - n * inward : wanted;
        // A head-on step leaves little to slide along; it goes round the
        // trunk instead, first on the side it leans towards.
        const double side = wanted.x * n.y - wanted.y * n.x;
        const Point2 round = side > 0.0 ? Point2{n.y, -n.x} : Point2{-n.y, n.x};
        std::vector<Point2> options;
        if (slide.norm() >= 0.25 * step) options.push_back(slide);
        options.push_back(round * step);
        options.push_back(round * -step);
        for (const Point2& d : options) {
          target = fence(here + d);
          if (!touching(target)) break;
        }
      }
      const bool blocked = touching(target) != nullptr;
      if (!blocked && !(target == next.pose.translation())) {
        next.speed = std::min(next.speed, distance(target, here) / cfg.dt);
        next.pose.x = target.x;
        next.pose.y = target.y;
      }
      if (blocked) {
        next.pose = a.truth.pose;
        next.pose.theta = step_vehicle(a.truth, {0.0, truth_cmd.heading}, cfg.dt, cfg.limits).pose.theta;
        next.speed = 0.0;
        a.path.clear();
      }
      const double step = distance(next.pose.translation(), a.truth.pose.translation());
      a.log.distance += step;
      if (step > 0.05 * cfg.dt) a.moving_time += cfg.dt;
      a.truth = next;
    }
    if (!any_active) break;
  }

  const double end_time = static_cast<double>(k) * cfg.dt;
  for (Agent& a : agents) {
    if (!a.done) {
      if (a.spec.route.empty()) log.duration_exceeded = true;
      a.log.completion_time = end_time;
      a.log.coverage.push_back({end_time, masked_coverage(a.grid, a.mask)});
      if (a.lifecycle)
        if (auto last = a.lifecycle->finish()) emit(a, std::move(*last), end_time, log);
    }
    a.log.average_speed = a.log.completion_time > 0.0 ? a.log.distance / a.log.completion_time : 0.0;
    a.log.moving_average_speed = a.moving_time > 0.0 ? a.log.distance / a.moving_time : 0.0;
    log.agents.push_back(std::move(a.log));
  }
  return log;
}

void write_trajectory(const std::filesystem::path& file, std::span<const double> stamps, std::span<const Pose2> poses) {
  if (stamps.size() != poses.size()) throw LengthMismatch("stamps and poses differ in length");
  std::FILE* f = std::fopen(file.c_str(), "w");
  if (!f) throw Error("cannot write " + file.string());
  for (std::size_t k = 0; k < poses.size(); ++k)
    std::fprintf(f, "%.3f %.6f %.6f %.6f\n", stamps[k], poses[k].x, poses[k].y, poses[k].theta);
  std::fclose(f);
}

void write_mission_log(const MissionLog& log, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const AgentLog& a : log.agents) {
    write_trajectory(dir / ("agent" + std::to_string(a.agent) + "_truth.txt"), a.stamps, a.truth);
    write_trajectory(dir / ("agent" + std::to_string(a.agent) + "_odom.txt"), a.stamps, a.odom);
  }
  {
    std::FILE* f = std::fopen((dir / "coverage.csv").c_str(), "w");
    if (!f) throw Error("cannot write coverage.csv");
    std::fprintf(f, "agent,time,coverage\n");
    for (const AgentLog& a : log.agents)
      for (const CoverageSample& c : a.coverage) std::fprintf(f, "%d,%.3f,%.6f\n", a.agent, c.stamp, c.fraction);
    std::fclose(f);
  }
  {
    std::FILE* f = std::fopen((dir / "payload.csv").c_str(), "w");
    if (!f) throw Error("cannot write payload.csv");
    std::fprintf(f, "time,agent,sequence,bytes,total_bytes\n");
    std::size_t total = 0;
    for (const SubmapMessage& m : log.queue) {
      total += m.bytes.size();
      const int seq = m.bytes.size() >= 6 ? (m.bytes[4] | (m.bytes[5] << 8)) : -1;
      std::fprintf(f, "%.3f,%d,%d,%zu,%zu\n", m.stamp, m.agent, seq, m.bytes.size(), total);
    }
    std::fclose(f);
  }
  {
    std::FILE* f = std::fopen((dir / "submap_truth.csv").c_str(), "w");
    if (!f) throw Error("cannot write submap_truth.csv");
    std::fprintf(f, "agent,sequence,x,y,theta\n");
    for (const AgentLog& a : log.agents)
      for (std::size_t s = 0; s < a.submap_truth.size(); ++s)
        std::fprintf(f, "%d,%zu,%.6f,%.6f,%.6f\n", a.agent, s, a.submap_truth[s].x, a.submap_truth[s].y,
                     a.submap_truth[s].theta);
    std::fclose(f);
  }
  {
    std::FILE* f = std::fopen((dir / "summary.txt").c_str(), "w");
    if (!f) throw Error("cannot write summary.txt");
    std::fprintf(f, "duration_exceeded = %d\n", log.duration_exceeded ? 1 : 0);
    std::size_t total = 0;
    for (const SubmapMessage& m : log.queue) total += m.bytes.size();
    std::fprintf(f, "n_submaps = %zu\ntotal_bytes = %zu\n", log.queue.size(), total);
    for (const AgentLog& a : log.agents) {
      const double cov = a.coverage.empty() ? 0.0 : a.coverage.back().fraction;
      std::fprintf(f,
                   "agent%d.completed = %d\nagent%d.completion_time = %.3f\nagent%d.distance = %.6f\n"
                   "agent%d.average_speed = %.6f\nagent%d.moving_average_speed = %.6f\nagent%d.coverage = %.6f\n"
                   "agent%d.submaps = %zu\n",
                   a.agent, a.completed ? 1 : 0, a.agent, a.completion_time, a.agent, a.distance, a.agent,
                   a.average_speed, a.agent, a.moving_average_speed, a.agent, cov, a.agent, a.submaps.size());
    }
    std::fclose(f);
  }
  {
    std::ofstream os(dir / "submaps.bin", std::ios::binary);
    if (!os) throw Error("cannot write submaps.bin");
    for (const SubmapMessage& m : log.queue) {
      const auto n = static_cast<std::uint32_t>(m.bytes.size());
      const unsigned char len[4] = {static_cast<unsigned char>(n & 0xFF), static_cast<unsigned char>((n >> 8) & 0xFF),
                                    static_cast<unsigned char>((n >> 16) & 0xFF),
                                    static_cast<unsigned char>((n >> 24) & 0xFF)};
      os.write(reinterpret_cast<const char*>(len), 4);
      os.write(reinterpret_cast<const char*>(m.bytes.data()), static_cast<std::streamsize>(m.bytes.size()));
    }
  }
}

std::vector<SubmapMessage> read_submap_stream(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw Error("cannot read " + file.string());
  std::vector<SubmapMessage> out;
  unsigned char len[4];
  while (is.read(reinterpret_cast<char*>(len), 4)) {
    const std::uint32_t n = len[0] | (len[1] << 8) | (len[2] << 16) | (static_cast<std::uint32_t>(len[3]) << 24);
    SubmapMessage m;
    m.bytes.resize(n);
    if (!is.read(reinterpret_cast<char*>(m.bytes.data()), n)) throw MalformedPayload("truncated submap stream");
    m.agent = n >= 4 ? m.bytes[3] : -1;
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace fcslam
