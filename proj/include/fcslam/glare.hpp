#pragma once

#include <span>
#include <vector>

#include "fcslam/kernels.hpp"
#include "fcslam/submap.hpp"

namespace fcslam {

struct GlareConfig {
  int n_rho = 120;
  int n_theta = 12;
  double rho_max = 30.0;    // m
  double blur_sigma = 0.1;  // in bins; 0 disables the blur
};

/// Pair-geometry histogram with n_rho rows (distance) and n_theta columns
/// (segment direction folded into [0, pi)), stored row-major.
struct GlareDescriptor {
  int n_rho = 0;
  int n_theta = 0;
  double rho_max = 0.0;
  std::vector<double> data;

  double at(int i, int j) const { return data[static_cast<std::size_t>(i) * n_theta + j]; }
  double sum() const;
  kernels::DescriptorView view() const { return {data.data(), n_rho, n_theta}; }
  /// Copy scaled to unit mass; an all-zero descriptor stays zero.
  GlareDescriptor normalized() const;
};

/// Sums one unit-mass kernel per unordered pair of points closer than
/// rho_max. The 5x5 Gaussian kernel wraps around in theta and is truncated
/// and renormalized in rho.
GlareDescriptor build_glare(std::span<const Point2> points, const GlareConfig& cfg = {});
GlareDescriptor build_glare(std::span<const TreeTrack> trees, const GlareConfig& cfg = {});

/// Rotation-invariant shifted-L1 distance: min over cyclic theta shifts k of
/// sum |G_t(i,j) - G_s(i,(j+k) mod n_theta)|. Throws DimensionMismatch.
double glarot_distance(const GlareDescriptor& s, const GlareDescriptor& t);

struct LoopCandidate {
  int s = 0;
  int t = 0;
  double distance = 0.0;
};

struct CandidateConfig {
  double epsilon = 1.5;
  /// Compare unit-mass descriptors so the threshold does not scale with
  /// tree count.
  bool normalize = true;
  /// Skip pairs that are consecutive submaps of one agent; needs `ids`.
  bool exclude_consecutive = false;
};

/// All pairs s < t with distance below epsilon, ordered by (s, t). `ids` may
/// be empty, in which case no pair is treated as consecutive.
std::vector<LoopCandidate> find_candidates(std::span<const GlareDescriptor> descriptors,
                                           std::span<const SubmapId> ids, const CandidateConfig& cfg = {});

/// Candidates between one new descriptor and all earlier ones.
std::vector<LoopCandidate> find_candidates_against(std::span<const GlareDescriptor> earlier,
                                                   std::span<const SubmapId> earlier_ids,
                                                   const GlareDescriptor& query, const SubmapId& query_id,
                                                   const CandidateConfig& cfg = {});

}  // namespace fcslam
