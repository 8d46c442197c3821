#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "fcslam/clear.hpp"
#include "fcslam/submap.hpp"

namespace fcslam {

struct OdometryFactor {
  int from = 0;
  int to = 0;
  Pose2 z;  // measured between(x_from, x_to)
  Eigen::Matrix3d information = Eigen::Matrix3d::Identity();
};

struct ObservationFactor {
  int pose = 0;
  int landmark = 0;
  Point2 p;  // landmark position in the pose frame
  Eigen::Matrix2d information = Eigen::Matrix2d::Identity();
};

struct PriorFactor {
  int pose = 0;
  Pose2 value;
  Eigen::Matrix3d information = Eigen::Matrix3d::Identity();
};

struct FactorGraph {
  std::vector<Pose2> poses;
  std::vector<Point2> landmarks;
  std::vector<SubmapId> pose_ids;
  std::vector<OdometryFactor> odometry;
  std::vector<ObservationFactor> observations;
  std::vector<PriorFactor> priors;  // one gauge anchor per connected component
  std::vector<int> component;       // per pose
  std::vector<int> unaligned_agents;  // agents anchored on their own

  int variable_count() const { return 3 * static_cast<int>(poses.size()) + 2 * static_cast<int>(landmarks.size()); }
  int residual_count() const;
  int component_count() const;
};

struct LmConfig {
  int max_iterations = 100;
  double relative_cost_tol = 1e-9;
  double gradient_tol = 1e-8;
  double initial_lambda = 1e-4;
};

struct SlamConfig {
  double odom_sigma_xy = 0.1;       // m, per submap link
  double odom_sigma_theta = 0.02;   // rad, per submap link
  double observation_sigma = 0.1;   // m
  double anchor_information = 1e8;
  LmConfig lm;
};

/// Relative transform between two submaps as found by loop-closure
/// verification: x_t = x_s * transform.
struct LoopClosure {
  int s = 0;
  int t = 0;
  Pose2 transform;
};

/// Poses are the submaps in the given order; landmarks are universe ids.
/// Consecutive same-agent submaps get odometry factors from their recorded
/// origins. Agents are brought into a common frame through the first loop
/// closure linking them to an already aligned agent; the lowest agent id is
/// the reference. Every connected component gets a prior on its first pose.
FactorGraph build_graph(std::span<const Submap> submaps, const GlobalAssociation& assoc,
                        std::span<const LoopClosure> closures, const SlamConfig& cfg = {});

struct Linearization {
  Eigen::VectorXd residual;                // whitened
  Eigen::SparseMatrix<double> jacobian;    // residual_count x variable_count
};

/// Stacked whitened residual and analytic Jacobian at the given values.
/// Odometry: between(z, between(x_from, x_to)) as (x, y, theta).
/// Observation: R(x)^T (l - t(x)) - p. Prior: (x - value) with wrapped angle.
Linearization residual_and_jacobian(const FactorGraph& graph, std::span<const Pose2> poses,
                                    std::span<const Point2> landmarks);
double graph_cost(const FactorGraph& graph, std::span<const Pose2> poses, std::span<const Point2> landmarks);

struct OptimizeResult {
  std::vector<Pose2> poses;
  std::vector<Point2> landmarks;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  std::vector<double> cost_log;  // cost after each accepted step
  std::string stop_reason;
};

/// Levenberg-Marquardt with Marquardt scaling and a sparse LDLT solve.
/// Throws SingularSystem when damping cannot make the system solvable.
OptimizeResult optimize(const FactorGraph& graph, const LmConfig& cfg = {});

/// Mean translational error; with `align` the estimate is first moved by the
/// best rigid fit onto the truth. Throws LengthMismatch.
double ate(std::span<const Pose2> estimated, std::span<const Pose2> truth, bool align);

/// Plain-text factor dump for debugging.
std::string dump_graph(const FactorGraph& graph);

}  // namespace fcslam
