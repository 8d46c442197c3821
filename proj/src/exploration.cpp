#include "fcslam/exploration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <tuple>

#include "fcslam/errors.hpp"

namespace fcslam {

std::vector<Frontier> extract_frontiers(const OccupancyGrid2D& grid, const Region& region) {
  std::vector<Frontier> out;
  static constexpr int kDx[4] = {1, -1, 0, 0};
  static constexpr int kDy[4] = {0, 0, 1, -1};
  for (int iy = 0; iy < grid.ny(); ++iy)
    for (int ix = 0; ix < grid.nx(); ++ix) {
      if (grid.state(ix, iy) != CellState::Free) continue;
      const Point2 c = grid.cell_center(ix, iy);
      if (!region.contains(c)) continue;
      for (int k = 0; k < 4; ++k) {
        const int x = ix + kDx[k], y = iy + kDy[k];
        if (grid.in_bounds(x, y) && grid.state(x, y) == CellState::Unknown) {
          out.push_back({{ix, iy}, c});
          break;
        }
      }
    }
  return out;
}

std::vector<FrontierCluster> cluster_frontiers(const OccupancyGrid2D& grid, std::span<const Frontier> frontiers) {
  std::vector<int> slot(grid.size(), -1);
  for (std::size_t k = 0; k < frontiers.size(); ++k)
    slot[grid.index(frontiers[k].cell.x, frontiers[k].cell.y)] = static_cast<int>(k);
  std::vector<char> done(frontiers.size(), 0);
  std::vector<FrontierCluster> out;
  std::vector<int> stack, members;
  for (std::size_t s = 0; s < frontiers.size(); ++s) {
    if (done[s]) continue;
    members.clear();
    stack.assign(1, static_cast<int>(s));
    done[s] = 1;
    while (!stack.empty()) {
      const int k = stack.back();
      stack.pop_back();
      members.push_back(k);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int x = frontiers[k].cell.x + dx, y = frontiers[k].cell.y + dy;
          if (!grid.in_bounds(x, y)) continue;
          const int j = slot[grid.index(x, y)];
          if (j >= 0 && !done[j]) {
            done[j] = 1;
            stack.push_back(j);
          }
        }
    }
    std::sort(members.begin(), members.end());
    FrontierCluster c;
    Point2 sum{};
    for (int k : members) {
      c.cells.push_back(frontiers[k].cell);
      sum = sum + frontiers[k].position;
    }
    c.centroid = sum * (1.0 / static_cast<double>(members.size()));
    double best = std::numeric_limits<double>::infinity();
    for (int k : members) {
      const double d = (frontiers[k].position - c.centroid).squared_norm();
      if (d < best) {
        best = d;
        c.representative = frontiers[k];
      }
    }
    out.push_back(std::move(c));
  }
  return out;
}

double frontier_cost(const Point2& f, const Pose2& v, double lambda) {
  const double dx = f.x - v.x, dy = f.y - v.y;
  const double dist = std::hypot(dx, dy);
  const double heading = dist > 0.0 ? std::abs(normalize_angle(std::atan2(dy, dx) - v.theta)) : 0.0;
  return heading + lambda * dist;
}

FrontierChoice select_frontier(std::span<const Frontier> frontiers, const Pose2& vehicle, const PlannerConfig& cfg,
                               const std::optional<Frontier>& active) {
  if (frontiers.empty()) throw NoFrontiers("no frontiers left");
  FrontierChoice best;
  best.cost = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < frontiers.size(); ++k) {
    const double j = frontier_cost(frontiers[k].position, vehicle, cfg.lambda);
    if (j < best.cost) {
      best.cost = j;
      best.index = static_cast<int>(k);
      best.frontier = frontiers[k];
    }
  }
  if (!active) {
    best.switched = true;
    return best;
  }
  const double ja = frontier_cost(active->position, vehicle, cfg.lambda);
  if (best.cost < cfg.switch_margin * ja) {
    best.switched = true;
    return best;
  }
  return {*active, ja, -1, false};
}

FrontierChoice select_closest_frontier(std::span<const Frontier> frontiers, const Pose2& vehicle) {
  if (frontiers.empty()) throw NoFrontiers("no frontiers left");
  FrontierChoice best;
  best.cost = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < frontiers.size(); ++k) {
    const double d = distance(frontiers[k].position, vehicle.translation());
    if (d < best.cost) {
      best.cost = d;
      best.index = static_cast<int>(k);
      best.frontier = frontiers[k];
    }
  }
  best.switched = true;
  return best;
}

TraversabilityMap::TraversabilityMap(const OccupancyGrid2D& grid, double safety_radius, bool inflate_border)
    : grid_(&grid) {
  inflated_.assign(grid.size(), 0);
  const double r = safety_radius / grid.resolution();
  const int R = static_cast<int>(std::ceil(r));
  reach_ = R;
  if (inflate_border) {
    // Distance from a cell center to the nearest outside cell center is
    // (cells to the edge + 1) cells.
    for (int iy = 0; iy < grid.ny(); ++iy)
      for (int ix = 0; ix < grid.nx(); ++ix) {
        const int edge = std::min({ix, iy, grid.nx() - 1 - ix, grid.ny() - 1 - iy}) + 1;
        if (edge <= r) inflated_[grid.index(ix, iy)] = 1;
      }
  }
  for (int iy = 0; iy < grid.ny(); ++iy)
    for (int ix = 0; ix < grid.nx(); ++ix) {
      if (grid.state(ix, iy) != CellState::Occupied) continue;
      for (int dy = -R; dy <= R; ++dy)
        for (int dx = -R; dx <= R; ++dx) {
          if (dx * dx + dy * dy > r * r) continue;
          const int x = ix + dx, y = iy + dy;
          if (grid.in_bounds(x, y)) inflated_[grid.index(x, y)] = 1;
        }
    }
}

bool TraversabilityMap::free(int ix, int iy) const {
  return grid_->in_bounds(ix, iy) && !inflated(ix, iy) && grid_->state(ix, iy) == CellState::Free;
}

std::vector<CellIndex> astar_plan(const TraversabilityMap& map, CellIndex start, CellIndex goal,
                                  const AstarOptions& opt) {
  const OccupancyGrid2D& g = map.grid();
  if (!g.in_bounds(start.x, start.y) || !g.in_bounds(goal.x, goal.y)) throw NoPath("start or goal outside the grid");
  if (!map.free(goal.x, goal.y)) throw NoPath("goal is blocked");
  if (!opt.allow_blocked_start && !map.free(start.x, start.y)) throw NoPath("start is blocked");

  // A blocked start may leave through known-free cells of the inflation
  // margin around it.
  const bool escape = !map.free(start.x, start.y);
  const int escape_reach = map.inflation_cells() + 1;
  auto passable = [&](int x, int y) {
    if (!g.in_bounds(x, y)) return false;
    if (map.free(x, y)) return true;
    if (escape && g.state(x, y) == CellState::Free && std::abs(x - start.x) <= escape_reach &&
        std::abs(y - start.y) <= escape_reach)
      return true;
    return g.state(x, y) == CellState::Unknown && !map.inflated(x, y) && std::abs(x - goal.x) <= 1 &&
           std::abs(y - goal.y) <= 1;
  };
  auto h = [&](int x, int y) {
    const double dx = std::abs(x - goal.x), dy = std::abs(y - goal.y);
    return (dx + dy) + (std::sqrt(2.0) - 2.0) * std::min(dx, dy);
  };

  const std::size_t n = g.size();
  std::vector<double> cost(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<char> closed(n, 0);
  using Entry = std::tuple<double, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  const std::size_t s = g.index(start.x, start.y), t = g.index(goal.x, goal.y);
  cost[s] = 0.0;
  open.emplace(h(start.x, start.y), s);
  const double diag = std::sqrt(2.0);
  while (!open.empty()) {
    const auto [f, u] = open.top();
    open.pop();
    if (closed[u]) continue;
    closed[u] = 1;
    if (u == t) break;
    const int ux = static_cast<int>(u % g.nx()), uy = static_cast<int>(u / g.nx());
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const int x = ux + dx, y = uy + dy;
        if (!passable(x, y)) continue;
        if (dx != 0 && dy != 0 && (!passable(ux + dx, uy) || !passable(ux, uy + dy))) continue;
        const std::size_t v = g.index(x, y);
        if (closed[v]) continue;
        const double c = cost[u] + (dx != 0 && dy != 0 ? diag : 1.0);
        if (c < cost[v]) {
          cost[v] = c;
          parent[v] = static_cast<int>(u);
          open.emplace(c + h(x, y), v);
        }
      }
  }
  if (!closed[t]) throw NoPath("goal unreachable");
  std::vector<CellIndex> path;
  for (int v = static_cast<int>(t); v >= 0; v = parent[v])
    path.push_back({v % g.nx(), v / g.nx()});
  std::reverse(path.begin(), path.end());
  return path;
}

std::vector<CellIndex> astar_plan(const OccupancyGrid2D& grid, CellIndex start, CellIndex goal, double safety_radius,
                                  const AstarOptions& opt) {
  const TraversabilityMap map(grid, safety_radius);
  return astar_plan(map, start, goal, opt);
}

double path_length_cells(std::span<const CellIndex> path) {
  double len = 0.0;
  for (std::size_t k = 1; k < path.size(); ++k) {
    const int dx = std::abs(path[k].x - path[k - 1].x), dy = std::abs(path[k].y - path[k - 1].y);
    len += (dx != 0 && dy != 0) ? std::sqrt(2.0) : 1.0;
  }
  return len;
}

}  // namespace fcslam
