#pragma once

#include <span>
#include <vector>

#include "fcslam/forest_sim.hpp"
#include "fcslam/geometry.hpp"

namespace fcslam {

struct CircleFit {
  Point2 center;
  double radius = 0.0;
  double residual = 0.0;  // RMS of (|p - c| - r) / r
  int n_points = 0;
};

struct TreeDetection {
  CircleFit circle;
  double arc_coverage = 0.0;
};

struct DpMeansConfig {
  double penalty_lambda = 0.8;  // m; distance beyond which a point opens a new cluster
  int max_iterations = 50;
};

/// DP-means over points visited in input order. Lloyd-style passes
/// (assign to nearest center or open a new cluster beyond lambda, then
/// recompute centroids) are followed by single-point moves that strictly lower
/// sum |x - mu|^2 + lambda^2 k. Clusters are returned ordered by their first
/// member index. `seed` is accepted for interface symmetry; the result depends
/// only on the point order.
std::vector<std::vector<int>> dp_means(std::span<const Point2> points, const DpMeansConfig& cfg,
                                       RngSeed seed = {});

/// DP-means objective: within-cluster squared distances to centroids plus
/// lambda^2 per cluster.
double dp_means_objective(std::span<const Point2> points, const std::vector<std::vector<int>>& clusters,
                          double lambda);

/// Algebraic circle fit (Taubin). Throws DegenerateGeometry for fewer than 3
/// points or (near-)collinear / coincident input.
CircleFit taubin_fit(std::span<const Point2> points);

/// Sum of squared geometric distances (|p - c| - r)^2.
double geometric_cost(std::span<const Point2> points, const Point2& center, double radius);

/// Radius-normalized RMS residual of a circle against points.
double circle_residual(std::span<const Point2> points, const Point2& center, double radius);

/// Levenberg-Marquardt minimization of the geometric cost starting from
/// `init`. Never returns a fit with a larger geometric cost or a larger
/// residual than `init`.
CircleFit lm_refine_circle(std::span<const Point2> points, const CircleFit& init, int max_iterations = 50,
                           double tol = 1e-12);

/// Fraction of the fitted circle covered by the union of per-point angular
/// intervals. Points are in the sensor frame; each point covers a half-width of
/// one angular-resolution step at its range, measured as an angle about the
/// circle center.
double arc_coverage(std::span<const Point2> points, const CircleFit& circle, double angular_resolution);

struct DetectionThresholds {
  double max_residual = 0.015;
  double min_radius = 0.1;
  double min_coverage = 0.30;
  double algebraic_gate = 0.15;  // Taubin residual above which the cluster is dropped
  int min_points = 3;
};

/// dp_means -> taubin_fit -> lm_refine_circle -> gate. Detections are in the
/// sensor frame, ordered by cluster.
std::vector<TreeDetection> detect_trees(const Scan& scan, const DpMeansConfig& dp = {},
                                        const DetectionThresholds& gate = {});

}  // namespace fcslam
