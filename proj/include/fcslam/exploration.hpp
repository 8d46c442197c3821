#pragma once

#include <optional>
#include <span>
#include <vector>

#include "fcslam/forest_sim.hpp"
#include "fcslam/occupancy.hpp"

namespace fcslam {

struct Frontier {
  CellIndex cell;
  Point2 position;  // cell center
};

struct PlannerConfig {
  double lambda = 0.5;
  double switch_margin = 0.8;  // replace the active frontier only below margin * J(active)
  double safety_radius = 0.4;  // m
};

/// FREE cells inside `region` with at least one UNKNOWN 4-neighbour, ordered
/// by (y, x) cell index.
std::vector<Frontier> extract_frontiers(const OccupancyGrid2D& grid, const Region& region);

/// 8-connected groups of frontier cells. Each group is summarized by the
/// member closest to the group's centroid (lowest index on ties).
struct FrontierCluster {
  std::vector<CellIndex> cells;
  Point2 centroid;
  Frontier representative;
};
std::vector<FrontierCluster> cluster_frontiers(const OccupancyGrid2D& grid, std::span<const Frontier> frontiers);

/// |heading error to the frontier| + lambda * distance.
double frontier_cost(const Point2& frontier, const Pose2& vehicle, double lambda);

struct FrontierChoice {
  Frontier frontier;
  double cost = 0.0;
  int index = -1;       // position in the candidate list, -1 when the active one is kept
  bool switched = false;
};

/// Lowest-cost frontier (first in list order on ties). With an active
/// frontier, the best candidate only replaces it when its cost is below
/// switch_margin times the active cost. Throws NoFrontiers on an empty list.
FrontierChoice select_frontier(std::span<const Frontier> frontiers, const Pose2& vehicle, const PlannerConfig& cfg,
                               const std::optional<Frontier>& active = std::nullopt);

/// Euclidean-closest frontier (first in list order on ties). Throws
/// NoFrontiers.
FrontierChoice select_closest_frontier(std::span<const Frontier> frontiers, const Pose2& vehicle);

/// Cells a planner may enter: FREE and farther than the safety radius from
/// every OCCUPIED cell.
class TraversabilityMap {
 public:
  /// With `inflate_border` the space outside the grid counts as an obstacle,
  /// so cells within the safety radius of the grid edge are inflated too.
  TraversabilityMap(const OccupancyGrid2D& grid, double safety_radius, bool inflate_border = false);
  const OccupancyGrid2D& grid() const { return *grid_; }
  bool inflated(int ix, int iy) const { return inflated_[grid_->index(ix, iy)] != 0; }
  bool free(int ix, int iy) const;
  /// Inflation radius in cells.
  int inflation_cells() const { return reach_; }

 private:
  const OccupancyGrid2D* grid_;
  std::vector<std::uint8_t> inflated_;
  int reach_ = 0;
};

struct AstarOptions {
  /// Plan from a blocked start, passing through known-free cells of the
  /// inflation margin close to it, so a vehicle that ended up inside the
  /// margin can leave.
  bool allow_blocked_start = false;
};

/// 8-connected shortest path (unit and sqrt(2) steps, no corner cutting
/// past blocked cells). UNKNOWN cells are blocked except those 8-adjacent to
/// the goal. Throws NoPath when the goal is blocked or unreachable.
std::vector<CellIndex> astar_plan(const TraversabilityMap& map, CellIndex start, CellIndex goal,
                                  const AstarOptions& opt = {});
std::vector<CellIndex> astar_plan(const OccupancyGrid2D& grid, CellIndex start, CellIndex goal, double safety_radius,
                                  const AstarOptions& opt = {});

/// Path length in cells (1 per straight step, sqrt(2) per diagonal).
double path_length_cells(std::span<const CellIndex> path);

}  // namespace fcslam
