#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "fcslam/clear.hpp"
#include "fcslam/ground_station.hpp"
#include "fcslam/mission.hpp"
#include "fcslam/tree_detect.hpp"

namespace fcslam {

// ---------------------------------------------------------------------------
// Scenarios

enum class StartLayout {
  Corner,    // each agent starts near the lower-left corner of its own area
  Boundary,  // agents start on both sides of the shared boundary, facing along it
  Outer,     // the first and last agent start at the far ends, away from shared boundaries
};

StartLayout parse_layout(const std::string& s);
std::string to_string(StartLayout l);

struct ScenarioConfig {
  int agents = 1;
  double width = 20.0;   // m, per-agent search area, areas are placed side by side along x
  double height = 20.0;
  double density = 0.2;  // trees per m^2
  double forest_margin = 10.0;  // trees are generated this far around the search areas
  StartLayout layout = StartLayout::Corner;
  double start_clearance = 1.0;
  RadiusRange radius;
  /// > 0: agents patrol a square loop inset this far from their area's edge
  /// instead of exploring.
  double route_inset = 0.0;
};

struct Scenario {
  Forest forest;
  std::vector<AgentSpec> agents;
};

Scenario build_scenario(const ScenarioConfig& cfg, RngSeed seed);

// ---------------------------------------------------------------------------
// Tree detection

struct DetectionScore {
  int detections = 0;
  int true_positives = 0;
};

/// One-to-one greedy matching by center distance. A detection is a true
/// positive when its center lies within match_distance of a still unmatched
/// trunk and the relative radius error is below radius_tolerance.
DetectionScore score_detections(std::span<const TreeDetection> detections, const Pose2& sensor_pose,
                                const Forest& forest, double match_distance = 0.5,
                                double radius_tolerance = 0.3);

struct DetectEvalConfig {
  int seeds = 500;
  std::vector<double> sigmas{0.01, 0.03, 0.05, 0.08};
  std::vector<double> densities{0.05, 0.1, 0.2, 0.4};
  double sigma_sweep_density = 0.2;
  double density_sweep_sigma = 0.05;
  double half_extent = 20.0;  // forest is a square of this half-size around the sensor
  SensorModel sensor;
  DpMeansConfig dp;
  DetectionThresholds gates;
  double match_distance = 0.5;
  double radius_tolerance = 0.3;
};

struct DetectEvalRow {
  std::string sweep;  // "sigma" or "density"
  double sigma = 0.0;
  double density = 0.0;
  int seeds_scored = 0;  // seeds with at least one detection
  double mean_precision = 1.0;
  long detections = 0;
  long true_positives = 0;
};

/// Single scans from a random heading at the center of Poisson forests.
/// Precision is averaged over seeds that produced detections.
std::vector<DetectEvalRow> detection_eval(const DetectEvalConfig& cfg, RngSeed root);

// ---------------------------------------------------------------------------
// GLAROT place recognition

struct GlarotEvalConfig {
  int seeds = 100;
  std::vector<double> densities{0.1, 0.2, 0.4};
  double submap_range = 10.0;   // trees farther than this from the sensor are ignored
  double overlap_offset = 2.0;  // second pose within this distance for overlapping views
  double disjoint_offset = 40.0;
  SensorModel sensor;
  double sensor_noise = 0.002;  // overrides sensor.range_noise_sigma
  GlareConfig glare;
  bool normalize = true;
};

struct GlarotEvalRow {
  double density = 0.0;
  int pairs = 0;
  double overlap_mean = 0.0;
  double disjoint_mean = 0.0;
  double margin() const { return disjoint_mean - overlap_mean; }
};

/// Per density and seed, one pair of nearby views and one pair of views far
/// enough apart that they share no trees, each described by GLARE over the
/// detected trunks.
std::vector<GlarotEvalRow> glarot_eval(const GlarotEvalConfig& cfg, RngSeed root);

// ---------------------------------------------------------------------------
// Multiway association on synthetic instances

struct SyntheticAssocConfig {
  int submaps = 8;
  int universe = 25;
  double visibility = 0.6;         // probability that a submap holds a given object
  double pair_probability = 1.0;   // probability that a submap pair has a pairwise result
  double drop = 0.2;               // fraction of true pairs missing from a pairwise result
  double corruption_min = 0.05;
  double corruption_max = 0.20;
};

/// Objects of every submap with their universe ids, and pairwise matchings.
struct SyntheticInstance {
  std::vector<int> sizes;
  std::vector<std::vector<int>> truth;  // truth[s][i] = universe id
  std::vector<PairwiseMatch> pairwise;
};

/// Cycle-consistent ground truth; `drop` == 0 and pair_probability == 1 give
/// every true pair.
SyntheticInstance make_consistent_instance(const SyntheticAssocConfig& cfg, Rng& rng);

/// Rewires `fraction` of all matched pairs to wrong targets, keeping each
/// pairwise matching injective. A rewired pair takes an unused target when
/// one exists and otherwise swaps targets with another pair.
void corrupt_matches(SyntheticInstance& inst, double fraction, Rng& rng);

/// Arbitrary partial permutations between random submap pairs, with no
/// underlying truth.
SyntheticInstance make_adversarial_instance(int submaps, int max_objects, Rng& rng);

struct AssocTrial {
  int trial = 0;
  double corruption = 0.0;
  AssociationScore input;
  AssociationScore output;
  bool consistent = false;
  bool improved() const { return output.precision >= input.precision && output.correct >= input.correct; }
};

std::vector<AssocTrial> assoc_eval(const SyntheticAssocConfig& cfg, const ClearConfig& clear, int trials,
                                   RngSeed root);

// ---------------------------------------------------------------------------
// Full pipeline runs

struct MissionRun {
  Scenario scenario;
  MissionLog log;
  PipelineState state;
};

/// Mission followed by a replay of its submap stream through the ground
/// station and a final solve.
MissionRun run_pipeline_mission(const ScenarioConfig& scenario, const MissionConfig& mission,
                                const PipelineConfig& pipeline, RngSeed seed);

/// Replays payloads in order and solves once at the end.
PipelineState replay_stream(std::span<const SubmapMessage> stream, const PipelineConfig& cfg);

/// World pose of the frame in which the solution places an agent's submaps.
Pose2 solution_frame(const PipelineState& state, std::span<const AgentLog> agents, int agent);

struct AgentTrajectories {
  std::vector<Pose2> truth;
  std::vector<Pose2> dead_reckoning;
  std::vector<Pose2> corrected;
};

/// Per-tick world trajectories of one agent: raw odometry from the start
/// pose, and odometry re-attached to the optimized submap origins.
AgentTrajectories agent_trajectories(const PipelineState& state, std::span<const AgentLog> agents, int agent);

/// Simulator ids for every track of the ingested submaps.
std::vector<std::vector<int>> pipeline_truth_ids(const PipelineState& state, std::span<const AgentLog> agents,
                                                 const Forest& forest);

struct SlamEvalRow {
  int seed = 0;
  int submaps = 0;
  int associations = 0;
  double ate_dead_reckoning = 0.0;
  double ate_slam = 0.0;
  double final_drift = 0.0;  // dead-reckoning position error at mission end
};

std::vector<SlamEvalRow> slam_eval(const ScenarioConfig& scenario, const MissionConfig& mission,
                                   const PipelineConfig& pipeline, int seeds, RngSeed root);

struct PlannerRow {
  int seed = 0;
  PlannerKind planner = PlannerKind::Proposed;
  bool completed = false;
  double completion_time = 0.0;
  double distance = 0.0;
  double average_speed = 0.0;
  double moving_average_speed = 0.0;
  double coverage = 0.0;
};

/// Paired runs of both planners on the same forests.
std::vector<PlannerRow> planner_compare(const ScenarioConfig& scenario, const MissionConfig& mission, int seeds,
                                        RngSeed root);

struct FusionRow {
  int seed = 0;
  int inter_agent_associations = 0;
  int first_inter_agent_ingest = -1;  // arrival index, -1 when none
  int components_before = 0;          // graph components just before that ingest
  int components_after = 0;           // at the end
  int landmarks = 0;
  double median_landmark_error = 0.0;
  AssociationScore raw;
  AssociationScore fused;
};

/// Multi-agent mission, incremental replay and landmark error against the
/// simulator. Each universe landmark is compared to the trunk most of its
/// tracks belong to.
std::vector<FusionRow> fusion_eval(const ScenarioConfig& scenario, const MissionConfig& mission,
                                   const PipelineConfig& pipeline, int seeds, RngSeed root);

/// Precision and correct-count of raw and CLEAR-fused matches for each
/// CG threshold on the stream of one mission per seed.
struct SweepRow {
  int seed = 0;
  double epsilon = 0.0;
  AssociationScore raw;
  AssociationScore fused;
};

std::vector<SweepRow> epsilon_sweep(const ScenarioConfig& scenario, const MissionConfig& mission,
                                    const PipelineConfig& pipeline, std::span<const double> epsilons, int seeds,
                                    RngSeed root);

// ---------------------------------------------------------------------------
// CSV writers

std::string to_csv(std::span<const DetectEvalRow> rows);
std::string to_csv(std::span<const GlarotEvalRow> rows);
std::string to_csv(std::span<const AssocTrial> rows);
std::string to_csv(std::span<const SlamEvalRow> rows);
std::string to_csv(std::span<const PlannerRow> rows);
std::string to_csv(std::span<const FusionRow> rows);
std::string to_csv(std::span<const SweepRow> rows);

/// Median of a copy; 0 for empty input.
double median(std::vector<double> v);

}  // namespace fcslam
