#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "fcslam/forest_sim.hpp"
#include "fcslam/geometry.hpp"

namespace fcslam {

enum class CellState : std::uint8_t { Unknown = 0, Free = 1, Occupied = 2 };

struct OccupancyParams {
  double hit = 0.85;
  double miss = -0.40;
  double clamp = 4.0;
  double occupied_threshold = 0.5;
};

struct CellIndex {
  int x = 0;
  int y = 0;
  bool operator==(const CellIndex&) const = default;
};

/// Fixed-extent 2D log-odds grid. Cell (ix, iy) covers
/// [origin.x + ix*res, origin.x + (ix+1)*res) and likewise in y. A cell reads
/// OCCUPIED above the occupied threshold, FREE once it has been updated and is
/// not occupied, and UNKNOWN until its first update.
class OccupancyGrid2D {
 public:
  OccupancyGrid2D() = default;
  OccupancyGrid2D(Point2 origin, int nx, int ny, double resolution, OccupancyParams params = {});
  /// Smallest grid anchored at (region.xmin, region.ymin) covering the region.
  static OccupancyGrid2D covering(const Region& region, double resolution, OccupancyParams params = {});

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double resolution() const { return res_; }
  Point2 origin() const { return origin_; }
  const OccupancyParams& params() const { return params_; }
  std::size_t size() const { return lo_.size(); }

  bool in_bounds(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx_ && iy < ny_; }
  std::size_t index(int ix, int iy) const { return static_cast<std::size_t>(iy) * nx_ + ix; }
  std::optional<CellIndex> cell_of(const Point2& p) const;
  Point2 cell_center(int ix, int iy) const;

  double log_odds(int ix, int iy) const { return lo_[index(ix, iy)]; }
  bool touched(int ix, int iy) const { return touched_[index(ix, iy)] != 0; }
  CellState state(int ix, int iy) const;
  CellState state(std::size_t i) const;

  void add_hit(std::size_t i);
  void add_miss(std::size_t i);

  /// Number of cells in each state.
  std::size_t count(CellState s) const;

  /// Per-scan scratch marks used to update each cell at most once per scan.
  std::vector<std::uint32_t>& marks() { return marks_; }
  std::uint32_t next_mark();

 private:
  Point2 origin_;
  int nx_ = 0, ny_ = 0;
  double res_ = 0.15;
  OccupancyParams params_;
  std::vector<float> lo_;
  std::vector<std::uint8_t> touched_;
  std::vector<std::uint32_t> marks_;
  std::uint32_t mark_ = 0;
};

/// Cells crossed by the segment a -> b in traversal order, clipped to the
/// grid. The cell containing b is last when it is inside the grid.
std::vector<CellIndex> trace_cells(const OccupancyGrid2D& grid, const Point2& a, const Point2& b);

/// Integrates one scan. For every beam the cells in front of the endpoint get
/// a miss and the endpoint cell a hit; beams without return, and returns
/// beyond `range_cap`, only carve free space out to min(max_range, range_cap).
/// Within one scan an endpoint cell is never also decremented, and every cell
/// is updated at most once.
void update_occupancy(OccupancyGrid2D& grid, const Scan& scan, const Pose2& sensor_pose,
                      double range_cap = std::numeric_limits<double>::infinity());

}  // namespace fcslam
