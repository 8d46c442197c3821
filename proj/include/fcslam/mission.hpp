#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fcslam/exploration.hpp"
#include "fcslam/forest_sim.hpp"
#include "fcslam/scan_odometry.hpp"
#include "fcslam/submap.hpp"
#include "fcslam/tree_detect.hpp"

namespace fcslam {

enum class PlannerKind { Proposed, Baseline };
enum class OdometrySource { Truth, Icp };

PlannerKind parse_planner(const std::string& s);
std::string to_string(PlannerKind k);

struct AgentSpec {
  int id = 0;
  Region region;  // search area
  Pose2 start;    // world frame
  /// When set, the agent cycles through these waypoints until the time cap
  /// instead of exploring frontiers.
  std::vector<Point2> route;
};

struct MissionConfig {
  double dt = 0.1;
  double duration_cap = 900.0;
  PlannerKind planner = PlannerKind::Proposed;
  PlannerConfig planner_cfg;
  VehicleLimits limits;
  double cruise_speed = 2.0;
  double lookahead = 1.0;        // m, pure-pursuit lookahead along the path
  double full_turn_angle = 1.0;  // rad; commanded speed falls linearly to 0 at this heading error
  double arrive_radius = 0.5;    // m
  int min_frontier_cells = 3;    // smaller frontier groups are ignored
  SensorModel sensor;
  double grid_resolution = 0.15;
  double map_range = 8.0;  // m, occupancy rays are cut here
  double map_margin = 2.0;  // m of map kept around the search region
  int map_every = 2;       // ticks between occupancy updates
  int plan_every = 5;      // ticks between frontier re-selection

  bool build_submaps = true;
  int detect_every = 1;
  double detection_range = 8.0;  // m, farther trunks are not added to submaps
  SubmapConfig submap;
  DpMeansConfig dp;
  DetectionThresholds gates;

  OdometrySource odometry = OdometrySource::Truth;
  IcpConfig icp;
  DriftModel drift;

  RngSeed seed{1};
};

struct SubmapMessage {
  double stamp = 0.0;
  int agent = 0;
  std::vector<std::uint8_t> bytes;
};

struct CoverageSample {
  double stamp = 0.0;
  double fraction = 0.0;
};

struct AgentLog {
  int agent = 0;
  AgentSpec spec;
  std::vector<double> stamps;
  std::vector<Pose2> truth;  // world frame
  std::vector<Pose2> odom;   // agent odometry frame, identity at start
  std::vector<int> submap_index;  // per stamp: sequence of the submap open at that time
  std::vector<CoverageSample> coverage;
  std::vector<Submap> submaps;         // finalized, unquantized
  std::vector<Pose2> submap_truth;     // world-frame truth pose at each submap origin
  bool completed = false;
  double completion_time = 0.0;
  double distance = 0.0;
  double average_speed = 0.0;
  double moving_average_speed = 0.0;
  int replans = 0;
  int unreachable = 0;
};

struct MissionLog {
  std::vector<AgentLog> agents;
  std::vector<SubmapMessage> queue;  // emission order
  bool duration_exceeded = false;
};

/// Closed-loop exploration: each tick every active agent senses, optionally
/// tracks trees into submaps, maps, re-plans and steps. Agents explore their
/// own regions independently; finalized submaps are encoded onto the queue.
MissionLog run_mission(const Forest& forest, std::span<const AgentSpec> agents, const MissionConfig& cfg);

/// Fraction of region cells (outside tree trunks) that are no longer
/// UNKNOWN.
double coverage_fraction(const OccupancyGrid2D& grid, const Forest& forest, const Region& region);

/// Writes the log directory: agent<k>_truth.txt / agent<k>_odom.txt
/// (`timestamp x y theta`), coverage.csv, payload.csv, submap_truth.csv,
/// summary.txt and submaps.bin (u32 little-endian length + payload per
/// message).
void write_mission_log(const MissionLog& log, const std::filesystem::path& dir);

/// Reads the payload stream written by write_mission_log.
std::vector<SubmapMessage> read_submap_stream(const std::filesystem::path& file);

/// Writes poses as `timestamp x y theta` lines.
void write_trajectory(const std::filesystem::path& file, std::span<const double> stamps, std::span<const Pose2> poses);

}  // namespace fcslam
