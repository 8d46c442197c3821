#include "fcslam/forest_sim.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "fcslam/errors.hpp"

namespace fcslam {

kernels::CircleSet Forest::circles() const {
  kernels::CircleSet set;
  for (const Tree& t : trees) set.push(t.center.x, t.center.y, t.radius);
  return set;
}

namespace {

// Dense bucket grid used for the non-overlap check during generation.
class SpacingGrid {
 public:
  SpacingGrid(const Region& region, double spacing)
      : region_(region), cell_(std::max(spacing, 1e-6)), spacing_(spacing) {
    nx_ = std::max(1, static_cast<int>(std::ceil(region.width() / cell_)));
    ny_ = std::max(1, static_cast<int>(std::ceil(region.height() / cell_)));
    buckets_.resize(static_cast<std::size_t>(nx_) * ny_);
  }

  bool free(const Point2& p, const std::vector<Tree>& trees) const {
    const int cx = ix(p.x), cy = iy(p.y);
    for (int y = std::max(0, cy - 1); y <= std::min(ny_ - 1, cy + 1); ++y)
      for (int x = std::max(0, cx - 1); x <= std::min(nx_ - 1, cx + 1); ++x)
        for (int k : buckets_[static_cast<std::size_t>(y) * nx_ + x])
          if (distance(trees[k].center, p) < spacing_) return false;
    return true;
  }

  void insert(const Point2& p, int index) {
    buckets_[static_cast<std::size_t>(iy(p.y)) * nx_ + ix(p.x)].push_back(index);
  }

 private:
  int ix(double x) const { return std::clamp(static_cast<int>((x - region_.xmin) / cell_), 0, nx_ - 1); }
  int iy(double y) const { return std::clamp(static_cast<int>((y - region_.ymin) / cell_), 0, ny_ - 1); }

  Region region_;
  double cell_;
  double spacing_;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> buckets_;
};

}  // namespace

Forest generate_forest(double density, const Region& region, RadiusRange radius_range, RngSeed seed) {
  if (density < 0.0) throw InvalidArgument("density must be non-negative");
  if (!(region.width() > 0.0) || !(region.height() > 0.0)) throw InvalidArgument("degenerate region");
  if (!(radius_range.min > 0.0) || radius_range.max < radius_range.min)
    throw InvalidArgument("invalid radius range");

  Forest forest;
  forest.region = region;
  forest.density = density;
  forest.seed = seed.seed;
  if (density == 0.0) return forest;

  Rng rng = make_rng(seed);
  std::poisson_distribution<long long> count_dist(density * region.area());
  const long long count = count_dist(rng);
  if (count == 0) return forest;

  std::uniform_real_distribution<double> ux(region.xmin, region.xmax);
  std::uniform_real_distribution<double> uy(region.ymin, region.ymax);
  std::uniform_real_distribution<double> ur(radius_range.min, radius_range.max);
  const double spacing = 2.0 * radius_range.max;
  SpacingGrid grid(region, spacing);

  const long long budget = 1000 * count;
  long long attempts = 0;
  forest.trees.reserve(static_cast<std::size_t>(count));
  while (static_cast<long long>(forest.trees.size()) < count) {
    if (++attempts > budget)
      throw ForestGenerationError("could not place " + std::to_string(count) + " trees within " +
                                  std::to_string(budget) + " attempts");
    const Point2 c{ux(rng), uy(rng)};
    const double r = ur(rng);
    if (!grid.free(c, forest.trees)) continue;
    grid.insert(c, static_cast<int>(forest.trees.size()));
    forest.trees.push_back({c, r});
  }
  return forest;
}

void clear_around(Forest& forest, const Point2& p, double clearance) {
  std::erase_if(forest.trees,
                [&](const Tree& t) { return distance(t.center, p) < t.radius + clearance; });
}

int SensorModel::beam_count() const {
  return static_cast<int>(std::lround(fov / angular_resolution)) + 1;
}

std::vector<double> SensorModel::bearings() const {
  const int n = beam_count();
  std::vector<double> b(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) b[static_cast<std::size_t>(k)] = -0.5 * fov + k * (fov / (n - 1));
  return b;
}

ForestView::ForestView(const Forest& forest, double cell_size)
    : forest_(&forest), grid_(forest.circles(), cell_size) {}

namespace {

void validate(const SensorModel& m) {
  if (!(m.max_range > 0.0) || !(m.fov > 0.0) || m.fov > 2.0 * kPi || !(m.angular_resolution > 0.0) ||
      m.range_noise_sigma < 0.0)
    throw InvalidArgument("invalid sensor model");
}

Scan finish_scan(const Pose2& pose, const SensorModel& model, const std::vector<double>& bearings,
                 std::vector<double>& ranges, RngSeed seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Scan scan;
  scan.pose_truth = pose;
  scan.max_range = model.max_range;
  scan.angular_resolution = model.angular_resolution;
  scan.beams.resize(bearings.size());
  for (std::size_t k = 0; k < bearings.size(); ++k) {
    const double z = noise(rng);
    scan.beams[k].bearing = bearings[k];
    if (ranges[k] == kNoReturn) continue;
    const double r = ranges[k] + model.range_noise_sigma * z;
    scan.beams[k].range = std::clamp(r, 0.0, model.max_range);
  }
  return scan;
}

}  // namespace

Scan simulate_scan(const ForestView& view, const Pose2& pose, const SensorModel& model, RngSeed seed) {
  validate(model);
  for (const Tree& t : view.forest().trees)
    if (distance(t.center, pose.translation()) < t.radius)
      throw PoseInsideTree("sensor at (" + std::to_string(pose.x) + ", " + std::to_string(pose.y) + ")");
  const std::vector<double> bearings = model.bearings();
  std::vector<double> ranges(bearings.size());
  kernels::raycast(view.grid(), pose, bearings, model.max_range, ranges);
  return finish_scan(pose, model, bearings, ranges, seed);
}

Scan simulate_scan(const Forest& forest, const Pose2& pose, const SensorModel& model, RngSeed seed) {
  const ForestView view(forest);
  return simulate_scan(view, pose, model, seed);
}

VehicleState step_vehicle(const VehicleState& state, const VehicleCommand& command, double dt,
                          const VehicleLimits& limits) {
  if (!(dt > 0.0)) throw InvalidArgument("dt must be positive");
  const double target = std::clamp(command.speed, 0.0, limits.v_max);
  const double v0 = state.speed;
  const double dv_max = limits.a_max * dt;
  double v1, dist;
  if (std::abs(target - v0) <= dv_max) {
    // Reaches the setpoint inside the step, then cruises.
    const double t_ramp = limits.a_max > 0.0 ? std::abs(target - v0) / limits.a_max : 0.0;
    v1 = target;
    dist = 0.5 * (v0 + target) * t_ramp + target * (dt - t_ramp);
  } else {
    v1 = v0 + (target > v0 ? dv_max : -dv_max);
    dist = 0.5 * (v0 + v1) * dt;
  }

  const double err = normalize_angle(command.heading - state.pose.theta);
  const double max_turn = limits.yaw_rate_max * dt;
  const double turn = std::clamp(err, -max_turn, max_turn);
  const double mid = state.pose.theta + 0.5 * turn;

  VehicleState next;
  next.speed = v1;
  next.pose = {state.pose.x + dist * std::cos(mid), state.pose.y + dist * std::sin(mid),
               normalize_angle(state.pose.theta + turn)};
  return next;
}

Pose2 corrupt_odometry(const Pose2& inc, const DriftModel& drift, Rng& rng) {
  std::normal_distribution<double> unit(0.0, 1.0);
  const double len = std::hypot(inc.x, inc.y);
  Pose2 out = inc;
  if (drift.translation_sigma > 0.0) {
    out.x += drift.translation_sigma * unit(rng);
    out.y += drift.translation_sigma * unit(rng);
  }
  if (drift.rotation_sigma > 0.0) out.theta += drift.rotation_sigma * unit(rng);
  out.x += drift.bias_per_meter.x * len;
  out.y += drift.bias_per_meter.y * len;
  out.theta = normalize_angle(out.theta + drift.bias_per_meter.theta * len);
  return out;
}

Pose2 corrupt_odometry(const Pose2& inc, const DriftModel& drift, RngSeed seed) {
  Rng rng = make_rng(seed);
  return corrupt_odometry(inc, drift, rng);
}

void write_forest(std::ostream& os, const Forest& f) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f %.6f %.6f %" PRIu64 "\n", f.density, f.region.xmin,
                f.region.ymin, f.region.xmax, f.region.ymax, f.seed);
  os << buf;
  for (const Tree& t : f.trees) {
    std::snprintf(buf, sizeof buf, "%.6f %.6f %.6f\n", t.center.x, t.center.y, t.radius);
    os << buf;
  }
}

Forest read_forest(std::istream& is) {
  Forest f;
  std::string line;
  if (!std::getline(is, line)) throw ParseError("empty forest file");
  {
    std::istringstream hs(line);
    if (!(hs >> f.density >> f.region.xmin >> f.region.ymin >> f.region.xmax >> f.region.ymax >> f.seed))
      throw ParseError("bad forest header: " + line);
  }
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    Tree t;
    if (!(ls >> t.center.x >> t.center.y >> t.radius)) throw ParseError("bad tree line: " + line);
    f.trees.push_back(t);
  }
  return f;
}

void write_scan(std::ostream& os, const Scan& s) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "scan %" PRIu64 " %.17g %.17g %.17g %.17g %zu %.17g %.17g\n", s.id, s.stamp,
                s.pose_truth.x, s.pose_truth.y, s.pose_truth.theta, s.beams.size(), s.max_range,
                s.angular_resolution);
  os << buf;
  for (std::size_t k = 0; k < s.beams.size(); ++k) {
    if (s.beams[k].has_return())
      std::snprintf(buf, sizeof buf, "%.17g %.17g", s.beams[k].bearing, s.beams[k].range);
    else
      std::snprintf(buf, sizeof buf, "%.17g -", s.beams[k].bearing);
    os << buf << (k + 1 == s.beams.size() ? "\n" : " ");
  }
  if (s.beams.empty()) os << "\n";
}

std::optional<Scan> read_scan(std::istream& is) {
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) break;
  if (line.empty()) return std::nullopt;
  std::istringstream hs(line);
  std::string tag;
  Scan s;
  std::size_t n = 0;
  if (!(hs >> tag >> s.id >> s.stamp >> s.pose_truth.x >> s.pose_truth.y >> s.pose_truth.theta >> n >>
        s.max_range >> s.angular_resolution) ||
      tag != "scan")
    throw ParseError("bad scan header: " + line);
  if (!std::getline(is, line)) throw ParseError("missing beam line");
  std::istringstream bs(line);
  s.beams.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::string r;
    if (!(bs >> s.beams[k].bearing >> r)) throw ParseError("truncated beam line");
    s.beams[k].range = r == "-" ? kNoReturn : std::stod(r);
  }
  return s;
}

}  // namespace fcslam
