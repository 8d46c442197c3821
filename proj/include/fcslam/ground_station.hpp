#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fcslam/cg_match.hpp"
#include "fcslam/clear.hpp"
#include "fcslam/forest_sim.hpp"
#include "fcslam/glare.hpp"
#include "fcslam/slam.hpp"

namespace fcslam {

struct PipelineConfig {
  GlareConfig glare;
  CandidateConfig candidates;
  CgConfig cg;
  ClearConfig clear;
  SlamConfig slam;
  /// false: every earlier submap is a candidate (the GLAROT distance is
  /// still recorded).
  bool use_glarot = true;
  /// false: the global association is the transitive closure of the raw
  /// pairwise matches.
  bool use_clear = true;
  /// false: ingest only records associations; call solve() explicitly.
  bool solve_on_change = true;
};

struct AcceptedAssociation {
  int s = 0;  // earlier submap (arrival index)
  int t = 0;  // later submap
  double glarot = 0.0;
  PairwiseAssociation match;
};

struct StageSeconds {
  double decode = 0.0;
  double glarot = 0.0;
  double cg = 0.0;
  double clear = 0.0;
  double slam = 0.0;
};

struct IngestRecord {
  SubmapId id;
  std::size_t bytes = 0;
  int candidates = 0;
  int accepted = 0;
  bool solved = false;
  StageSeconds seconds;  // wall time, excluded from deterministic dumps
};

struct PipelineState {
  std::vector<Submap> submaps;  // decoded, in arrival order
  std::vector<SubmapId> ids;
  std::vector<GlareDescriptor> descriptors;
  std::vector<AcceptedAssociation> associations;  // acceptance order
  GlobalAssociation global;
  std::optional<FactorGraph> graph;
  std::optional<OptimizeResult> solution;
  int solved_submaps = 0;  // submaps covered by the latest solution
  std::vector<IngestRecord> ledger;

  std::size_t total_bytes() const;
};

/// Decodes one payload and runs the loop-closure pipeline against all earlier
/// submaps. Re-solves association and SLAM when a new association was
/// accepted. Leaves the state untouched when decoding fails.
void ingest_submap(PipelineState& state, std::span<const std::uint8_t> bytes, const PipelineConfig& cfg = {});

/// Global association and SLAM over everything ingested so far.
void solve(PipelineState& state, const PipelineConfig& cfg = {});

/// Pairwise matches between submaps as seen by the back end: raw accepted
/// associations, or those induced by the global association.
std::vector<PairwiseMatch> raw_matches(const PipelineState& state);
std::vector<PairwiseMatch> fused_matches(const PipelineState& state);

/// Transitive closure of pairwise matches into universe ids (no consistency
/// enforcement).
GlobalAssociation transitive_association(std::span<const PairwiseMatch> pairwise, std::span<const int> sizes);

/// Submap origins in the solution frame. Submaps that arrived after the last
/// solve are chained on the latest solved submap of their agent by odometry;
/// agents without any solved submap keep their raw odometry origins.
std::vector<Pose2> estimated_origins(const PipelineState& state);

/// Simulator tree index for every track of every submap (-1 when no trunk is
/// within max_distance). Tracks are placed in the world through the true
/// submap origin.
std::vector<std::vector<int>> true_tree_ids(std::span<const Submap> submaps, std::span<const Pose2> truth_origins,
                                            const Forest& forest, double max_distance = 0.5);

struct AssociationScore {
  int proposed = 0;
  int correct = 0;
  double precision = 1.0;  // 1.0 when nothing was proposed
};

struct EvalReport {
  AssociationScore raw;
  AssociationScore fused;
  double ate_dead_reckoning = 0.0;
  double ate_slam = 0.0;
  std::size_t payload_bytes = 0;
  StageSeconds runtime;
};

/// A proposed object pair is correct when both tracks map to the same
/// simulator tree. Throws MissingGroundTruth when `truth` does not cover a
/// referenced submap or object.
AssociationScore evaluate_associations(std::span<const PairwiseMatch> proposed,
                                       const std::vector<std::vector<int>>& truth);

/// CSV tables indexed by ingest count. Payload: index,agent,sequence,bytes,
/// cumulative_bytes. Runtime: index,glarot,cg,clear,slam with cumulative
/// seconds.
std::string payload_table(const PipelineState& state);
std::string runtime_table(const PipelineState& state);

/// Deterministic text dump of ids, associations, global association and the
/// latest solution.
std::string dump_state(const PipelineState& state);

}  // namespace fcslam
