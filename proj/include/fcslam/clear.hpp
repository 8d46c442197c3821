#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fcslam/cg_match.hpp"

namespace fcslam {

/// Pairwise association between submaps s and t (indices into the size list).
struct PairwiseMatch {
  int s = 0;
  int t = 0;
  PartialPermutation perm;  // object of s -> object of t
};

/// Objects are enumerated flat: submap s owns indices
/// offsets[s] .. offsets[s] + sizes[s] - 1.
struct AssociationGraph {
  std::vector<int> sizes;
  std::vector<int> offsets;
  Eigen::MatrixXd adjacency;  // symmetric 0/1, zero diagonal blocks
  Eigen::VectorXd degree;

  int object_count() const { return static_cast<int>(adjacency.rows()); }
  int submap_of(int flat) const;
};

/// Aggregate adjacency symmetrized as max(A, A^T). Throws InconsistentSizes
/// when a match references a submap or object outside `sizes`.
AssociationGraph build_aggregate(std::span<const PairwiseMatch> pairwise, std::span<const int> sizes);

/// D^-1/2 (D - A) D^-1/2 with zero rows and columns for isolated vertices.
Eigen::MatrixXd normalized_laplacian(const AssociationGraph& g);
Eigen::MatrixXd laplacian(const AssociationGraph& g);

/// Number of eigenvalues of a normalized Laplacian strictly below
/// `threshold`. Isolated vertices have eigenvalue 0 and count as one object
/// each.
int estimate_universe_size(const Eigen::MatrixXd& l_nrm, double threshold = 0.5);

struct GlobalAssociation {
  int universe_size = 0;
  std::vector<std::vector<int>> maps;  // maps[s][i] = universe id of object i of submap s
};

enum class ClusterMethod { Greedy, Hungarian };

struct ClearConfig {
  double eigen_threshold = 0.5;
  ClusterMethod method = ClusterMethod::Greedy;
  int refine_iterations = 10;
  /// Objects whose cosine similarity to their cluster center falls below
  /// this stay singletons.
  double min_similarity = 0.5;
};

/// Cycle-consistent multiway matching. Each connected component of the
/// aggregate graph is solved on its own: the universe size comes from the
/// normalized Laplacian spectrum, the rows of the eigenvectors with the
/// smallest eigenvalues (unit-normalized) embed the objects, and objects are
/// assigned to clusters with at most one object per submap per cluster.
/// Objects that cannot be placed become singletons. Universe ids are ordered
/// by the smallest flat object index in each cluster.
GlobalAssociation clear_solve(std::span<const PairwiseMatch> pairwise, std::span<const int> sizes,
                              const ClearConfig& cfg = {});

/// Composition through the universe: i -> j whenever maps[s][i] == maps[t][j].
PartialPermutation compose_pairwise(const GlobalAssociation& assoc, int s, int t);

/// Every non-empty pairwise matching induced by a global association, s < t.
std::vector<PairwiseMatch> induced_matches(const GlobalAssociation& assoc);

struct ObjectRef {
  int submap = 0;
  int index = 0;
  bool operator==(const ObjectRef&) const = default;
};

struct ConsistencyReport {
  bool consistent = true;
  std::vector<ObjectRef> witness;  // offending connected component, empty when consistent
};

/// Consistent iff every connected component of the association graph is a
/// clique holding at most one object per submap.
ConsistencyReport check_cycle_consistency(std::span<const PairwiseMatch> pairwise, std::span<const int> sizes);

/// Rectangular min-cost assignment (Hungarian / Kuhn-Munkres with
/// potentials). cost is rows x cols; returns the column for each row, -1 for
/// rows left unassigned when rows > cols.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

}  // namespace fcslam
