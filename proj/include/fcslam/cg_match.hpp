#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "fcslam/submap.hpp"

namespace fcslam {

/// Injective partial map {0..size_s-1} -> {0..size_t-1}.
class PartialPermutation {
 public:
  PartialPermutation() = default;
  PartialPermutation(int source_size, int target_size);

  int source_size() const { return static_cast<int>(fwd_.size()); }
  int target_size() const { return static_cast<int>(bwd_.size()); }
  /// Image of i, or -1.
  int at(int i) const { return fwd_[i]; }
  /// Preimage of j, or -1.
  int preimage(int j) const { return bwd_[j]; }
  /// Throws InvalidArgument when i or j is out of range or already mapped.
  void set(int i, int j);
  int count() const { return count_; }
  /// (i, j) pairs in increasing i.
  std::vector<std::pair<int, int>> pairs() const;
  PartialPermutation inverse() const;
  /// this followed by other: i -> other(this(i)), defined where both are.
  PartialPermutation then(const PartialPermutation& other) const;
  bool operator==(const PartialPermutation&) const = default;

 private:
  std::vector<int> fwd_, bwd_;
  int count_ = 0;
};

struct CgConfig {
  double epsilon = 0.15;  // m
  int tau = 7;            // minimum clique size for a loop closure
  bool radius_prefilter = true;
  double radius_tolerance = 0.25;  // relative radius difference admitted as a hypothesis
};

/// Vertex v is the hypothesis (src[v], dst[v]); vertices are ordered by
/// (src, dst). adjacency is n*n row-major 0/1.
struct CorrespondenceGraph {
  std::vector<int> src, dst;
  std::vector<std::uint8_t> adjacency;
  double epsilon = 0.0;

  int size() const { return static_cast<int>(src.size()); }
  bool edge(int u, int v) const { return adjacency[static_cast<std::size_t>(u) * src.size() + v] != 0; }
};

/// Row-major pairwise distance matrix of a point set.
std::vector<double> distance_matrix(std::span<const Point2> pts);

CorrespondenceGraph build_correspondence_graph(std::span<const TreeTrack> s, std::span<const TreeTrack> t,
                                               const CgConfig& cfg = {});

/// Maximum clique of an undirected graph given as an n*n 0/1 matrix.
/// Branch-and-bound with a greedy-colouring bound; among maximum cliques the
/// lexicographically smallest sorted vertex set is returned.
std::vector<int> max_clique(int n, std::span<const std::uint8_t> adjacency);
std::vector<int> max_clique(const CorrespondenceGraph& g);

struct PairwiseAssociation {
  PartialPermutation matches;
  Pose2 transform;  // maps submap-t coordinates into submap-s coordinates
  bool weak_geometry = false;
};

/// Correspondence graph + maximum clique. Returns nothing when the clique has
/// fewer than cfg.tau vertices. The result does not depend on argument
/// order: swapping s and t yields the inverse matching and transform.
std::optional<PairwiseAssociation> pairwise_associate(const Submap& s, const Submap& t, const CgConfig& cfg = {});

}  // namespace fcslam
