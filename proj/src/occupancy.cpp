#include "fcslam/occupancy.hpp"

#include <algorithm>
#include <cmath>

#include "fcslam/errors.hpp"

namespace fcslam {

OccupancyGrid2D::OccupancyGrid2D(Point2 origin, int nx, int ny, double resolution, OccupancyParams params)
    : origin_(origin), nx_(nx), ny_(ny), res_(resolution), params_(params) {
  if (nx <= 0 || ny <= 0 || !(resolution > 0.0)) throw InvalidArgument("invalid occupancy grid shape");
  const std::size_t n = static_cast<std::size_t>(nx) * ny;
  lo_.assign(n, 0.0f);
  touched_.assign(n, 0);
  marks_.assign(n, 0);
}

OccupancyGrid2D OccupancyGrid2D::covering(const Region& region, double resolution, OccupancyParams params) {
  const int nx = std::max(1, static_cast<int>(std::ceil(region.width() / resolution - 1e-9)));
  const int ny = std::max(1, static_cast<int>(std::ceil(region.height() / resolution - 1e-9)));
  return OccupancyGrid2D({region.xmin, region.ymin}, nx, ny, resolution, params);
}

std::optional<CellIndex> OccupancyGrid2D::cell_of(const Point2& p) const {
  const double fx = std::floor((p.x - origin_.x) / res_);
  const double fy = std::floor((p.y - origin_.y) / res_);
  if (fx < 0 || fy < 0 || fx >= nx_ || fy >= ny_) return std::nullopt;
  return CellIndex{static_cast<int>(fx), static_cast<int>(fy)};
}

Point2 OccupancyGrid2D::cell_center(int ix, int iy) const {
  return {origin_.x + (ix + 0.5) * res_, origin_.y + (iy + 0.5) * res_};
}

CellState OccupancyGrid2D::state(std::size_t i) const {
  if (!touched_[i]) return CellState::Unknown;
  return lo_[i] > params_.occupied_threshold ? CellState::Occupied : CellState::Free;
}

CellState OccupancyGrid2D::state(int ix, int iy) const { return state(index(ix, iy)); }

void OccupancyGrid2D::add_hit(std::size_t i) {
  lo_[i] = static_cast<float>(std::min(params_.clamp, lo_[i] + params_.hit));
  touched_[i] = 1;
}

void OccupancyGrid2D::add_miss(std::size_t i) {
  lo_[i] = static_cast<float>(std::max(-params_.clamp, lo_[i] + params_.miss));
  touched_[i] = 1;
}

std::size_t OccupancyGrid2D::count(CellState s) const {
  std::size_t c = 0;
  for (std::size_t i = 0; i < lo_.size(); ++i) c += state(i) == s;
  return c;
}

std::uint32_t OccupancyGrid2D::next_mark() {
  if (++mark_ == 0) {
    std::fill(marks_.begin(), marks_.end(), 0);
    mark_ = 1;
  }
  return mark_;
}

namespace {

// Amanatides-Woo traversal in cell units; visit(ix, iy) for every cell from
// the start cell to the end cell inclusive.
template <class Visit>
void traverse(const OccupancyGrid2D& g, const Point2& a, const Point2& b, Visit&& visit) {
  const double res = g.resolution();
  const double fx = (a.x - g.origin().x) / res, fy = (a.y - g.origin().y) / res;
  const double gx = (b.x - g.origin().x) / res, gy = (b.y - g.origin().y) / res;
  int ix = static_cast<int>(std::floor(fx)), iy = static_cast<int>(std::floor(fy));
  const int ex = static_cast<int>(std::floor(gx)), ey = static_cast<int>(std::floor(gy));
  const double dx = gx - fx, dy = gy - fy;
  const int sx = dx > 0 ? 1 : (dx < 0 ? -1 : 0);
  const int sy = dy > 0 ? 1 : (dy < 0 ? -1 : 0);
  constexpr double inf = std::numeric_limits<double>::infinity();
  double tmx = sx != 0 ? ((ix + (sx > 0 ? 1 : 0)) - fx) / dx : inf;
  double tmy = sy != 0 ? ((iy + (sy > 0 ? 1 : 0)) - fy) / dy : inf;
  const double tdx = sx != 0 ? std::abs(1.0 / dx) : inf;
  const double tdy = sy != 0 ? std::abs(1.0 / dy) : inf;
  const int steps = std::abs(ex - ix) + std::abs(ey - iy);
  for (int k = 0; k < steps; ++k) {
    visit(ix, iy);
    const bool step_x = iy == ey || (ix != ex && tmx <= tmy);
    if (step_x) {
      ix += sx;
      tmx += tdx;
    } else {
      iy += sy;
      tmy += tdy;
    }
  }
  visit(ix, iy);
}

}  // namespace

std::vector<CellIndex> trace_cells(const OccupancyGrid2D& grid, const Point2& a, const Point2& b) {
  std::vector<CellIndex> out;
  traverse(grid, a, b, [&](int ix, int iy) {
    if (grid.in_bounds(ix, iy)) out.push_back({ix, iy});
  });
  return out;
}

void update_occupancy(OccupancyGrid2D& grid, const Scan& scan, const Pose2& sensor_pose, double range_cap) {
  const std::uint32_t hit_mark = grid.next_mark();
  const std::uint32_t miss_mark = grid.next_mark();
  std::vector<std::uint32_t>& marks = grid.marks();
  const Point2 o = sensor_pose.translation();
  const double carve = std::min(scan.max_range, range_cap);

  std::vector<std::size_t> hits;
  for (const Beam& b : scan.beams) {
    if (!b.has_return() || b.range > range_cap) continue;
    const double a = sensor_pose.theta + b.bearing;
    const auto c = grid.cell_of({o.x + b.range * std::cos(a), o.y + b.range * std::sin(a)});
    if (!c) continue;
    const std::size_t i = grid.index(c->x, c->y);
    if (marks[i] != hit_mark) {
      marks[i] = hit_mark;
      hits.push_back(i);
    }
  }

  for (const Beam& b : scan.beams) {
    const bool hit = b.has_return() && b.range <= range_cap;
    const double len = hit ? b.range : carve;
    const double a = sensor_pose.theta + b.bearing;
    const Point2 end{o.x + len * std::cos(a), o.y + len * std::sin(a)};
    traverse(grid, o, end, [&](int ix, int iy) {
      if (!grid.in_bounds(ix, iy)) return;
      const std::size_t i = grid.index(ix, iy);
      if (marks[i] == hit_mark || marks[i] == miss_mark) return;
      marks[i] = miss_mark;
      grid.add_miss(i);
    });
  }
  for (std::size_t i : hits) grid.add_hit(i);
}

}  // namespace fcslam
