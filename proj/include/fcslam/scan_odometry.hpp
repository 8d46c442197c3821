#pragma once

#include <span>
#include <vector>

#include "fcslam/forest_sim.hpp"
#include "fcslam/geometry.hpp"

namespace fcslam {

struct IcpConfig {
  int max_iterations = 30;
  double convergence_tol = 1e-4;
  double correspondence_cutoff = 1.0;
  double min_inlier_fraction = 0.3;
  /// Pairs farther apart than this multiple of the median pair distance are
  /// left out of each alignment step; 0 keeps every pair.
  double trim_factor = 3.0;
};

struct IcpResult {
  Pose2 transform;          // maps current-frame points into the previous frame
  double mean_residual = 0.0;
  double inlier_fraction = 0.0;
  bool converged = false;   // false: iteration cap reached
  bool reliable = false;    // inlier_fraction >= min_inlier_fraction
  int iterations = 0;
  std::vector<double> residual_log;  // mean inlier distance before each update
};

/// Sensor-frame Cartesian points of all beams with a return, in beam order.
std::vector<Point2> scan_to_points(const Scan& scan);

/// Point-to-point ICP with a bucket-grid nearest-neighbour index on the
/// previous cloud. Throws DegenerateGeometry when fewer than 3 inlier
/// correspondences remain at any iteration.
IcpResult icp_align(std::span<const Point2> points_prev, std::span<const Point2> points_curr,
                    const Pose2& initial_guess, const IcpConfig& cfg = {});

/// Left-composes increments from the identity; result has increments+1 poses.
std::vector<Pose2> integrate_odometry(std::span<const Pose2> increments);

}  // namespace fcslam
