#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "fcslam/geometry.hpp"
#include "fcslam/kernels.hpp"

namespace fcslam {

struct Region {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool contains(const Point2& p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
};

struct Tree {
  Point2 center;
  double radius = 0.0;
};

struct Forest {
  std::vector<Tree> trees;
  Region region;
  double density = 0.0;
  std::uint64_t seed = 0;

  kernels::CircleSet circles() const;
};

struct RadiusRange {
  double min = 0.1;
  double max = 0.3;
};

/// Poisson forest with non-overlapping trunks. Tree count is Poisson with
/// mean density * area; centers closer than 2 * radius_range.max are
/// rejected and resampled. Throws ForestGenerationError when the sampled count
/// cannot be placed within 1000 * count attempts.
Forest generate_forest(double density, const Region& region, RadiusRange radius_range, RngSeed seed);

/// Removes trees whose trunk comes within `clearance` of `p`.
void clear_around(Forest& forest, const Point2& p, double clearance);

struct SensorModel {
  double max_range = 30.0;
  double fov = 1.5 * kPi;
  double angular_resolution = 0.25 * kPi / 180.0;
  double range_noise_sigma = 0.0;

  int beam_count() const;
  /// Bearings from -fov/2 to +fov/2 inclusive, strictly increasing.
  std::vector<double> bearings() const;
};

inline constexpr double kNoReturn = std::numeric_limits<double>::infinity();

struct Beam {
  double bearing = 0.0;
  double range = kNoReturn;

  bool has_return() const { return range != kNoReturn; }
};

struct Scan {
  std::uint64_t id = 0;
  double stamp = 0.0;
  std::vector<Beam> beams;
  Pose2 pose_truth;  // evaluation only; never read by the pipeline
  double max_range = 30.0;
  double angular_resolution = 0.25 * kPi / 180.0;
};

/// Precomputed acceleration structure for repeated scans of one forest.
class ForestView {
 public:
  explicit ForestView(const Forest& forest, double cell_size = 2.0);
  const kernels::CircleGrid& grid() const { return grid_; }
  const Forest& forest() const { return *forest_; }

 private:
  const Forest* forest_;
  kernels::CircleGrid grid_;
};

/// Occlusion-aware range scan with i.i.d. Gaussian range noise. Throws
/// PoseInsideTree when the sensor origin lies inside a trunk.
Scan simulate_scan(const ForestView& forest, const Pose2& pose, const SensorModel& model, RngSeed seed);
Scan simulate_scan(const Forest& forest, const Pose2& pose, const SensorModel& model, RngSeed seed);

struct VehicleState {
  Pose2 pose;
  double speed = 0.0;
};

struct VehicleCommand {
  double speed = 0.0;    // setpoint, m/s
  double heading = 0.0;  // setpoint, rad
};

struct VehicleLimits {
  double v_max = 2.0;
  double a_max = 0.4;
  double yaw_rate_max = 0.6;
};

/// First-order kinematic update: speed ramps toward the clamped setpoint at
/// a_max, heading turns toward the setpoint at yaw_rate_max, and the vehicle
/// advances along the mid-step heading by the exact distance of the piecewise
/// linear speed profile.
VehicleState step_vehicle(const VehicleState& state, const VehicleCommand& command, double dt,
                          const VehicleLimits& limits);

struct DriftModel {
  double translation_sigma = 0.0;  // per step, per axis
  double rotation_sigma = 0.0;     // per step
  Pose2 bias_per_meter;            // scaled by the step's translation length
};

Pose2 corrupt_odometry(const Pose2& true_increment, const DriftModel& drift, Rng& rng);
Pose2 corrupt_odometry(const Pose2& true_increment, const DriftModel& drift, RngSeed seed);

// ---------------------------------------------------------------------------
// Text formats

/// Header `density xmin ymin xmax ymax seed`, then `x y radius` per tree, six
/// decimals.
void write_forest(std::ostream& os, const Forest& forest);
Forest read_forest(std::istream& is);

/// Scan log, one record per scan:
///   scan <id> <stamp> <x> <y> <theta> <n_beams> <max_range> <angular_resolution>
///   <bearing_0> <range_0> ... <bearing_{n-1}> <range_{n-1}>
/// where a range of `-` marks a beam without return. Numbers use %.17g so a
/// log round-trips exactly.
void write_scan(std::ostream& os, const Scan& scan);
std::optional<Scan> read_scan(std::istream& is);

}  // namespace fcslam
