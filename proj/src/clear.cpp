#include "fcslam/clear.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <tuple>

#include <Eigen/Eigenvalues>

#include "fcslam/errors.hpp"

namespace fcslam {

int AssociationGraph::submap_of(int flat) const {
  const auto it = std::upper_bound(offsets.begin(), offsets.end(), flat);
  return static_cast<int>(it - offsets.begin()) - 1;
}

AssociationGraph build_aggregate(std::span<const PairwiseMatch> pairwise, std::span<const int> sizes) {
  AssociationGraph g;
  g.sizes.assign(sizes.begin(), sizes.end());
  g.offsets.resize(sizes.size());
  int n = 0;
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    if (sizes[s] < 0) throw InconsistentSizes("negative submap size");
    g.offsets[s] = n;
    n += sizes[s];
  }
  g.adjacency = Eigen::MatrixXd::Zero(n, n);
  const int ns = static_cast<int>(sizes.size());
  for (const PairwiseMatch& m : pairwise) {
    if (m.s < 0 || m.s >= ns || m.t < 0 || m.t >= ns) throw InconsistentSizes("match references unknown submap");
    if (m.s == m.t) throw InconsistentSizes("match within a single submap");
    if (m.perm.source_size() != sizes[m.s] || m.perm.target_size() != sizes[m.t])
      throw InconsistentSizes("permutation shape does not match submap sizes");
    for (const auto& [i, j] : m.perm.pairs()) {
      const int a = g.offsets[m.s] + i, b = g.offsets[m.t] + j;
      g.adjacency(a, b) = 1.0;
      g.adjacency(b, a) = 1.0;
    }
  }
  g.degree = g.adjacency.rowwise().sum();
  return g;
}

Eigen::MatrixXd laplacian(const AssociationGraph& g) {
  Eigen::MatrixXd L = -g.adjacency;
  L.diagonal() += g.degree;
  return L;
}

Eigen::MatrixXd normalized_laplacian(const AssociationGraph& g) {
  const int n = g.object_count();
  Eigen::VectorXd inv_sqrt(n);
  for (int i = 0; i < n; ++i) inv_sqrt[i] = g.degree[i] > 0.0 ? 1.0 / std::sqrt(g.degree[i]) : 0.0;
  Eigen::MatrixXd L = laplacian(g);
  return inv_sqrt.asDiagonal() * L * inv_sqrt.asDiagonal();
}

int estimate_universe_size(const Eigen::MatrixXd& l_nrm, double threshold) {
  if (l_nrm.rows() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(l_nrm, Eigen::EigenvaluesOnly);
  int m = 0;
  for (int k = 0; k < es.eigenvalues().size(); ++k) m += es.eigenvalues()[k] < threshold;
  return m;
}

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const int rows = static_cast<int>(cost.rows()), cols = static_cast<int>(cost.cols());
  if (rows == 0) return {};
  if (cols == 0) return std::vector<int>(static_cast<std::size_t>(rows), -1);
  if (rows > cols) {
    const std::vector<int> t = hungarian(cost.transpose());
    std::vector<int> out(static_cast<std::size_t>(rows), -1);
    for (int c = 0; c < cols; ++c)
      if (t[c] >= 0) out[t[c]] = c;
    return out;
  }
  // Shortest augmenting paths with row/column potentials, 1-based.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(rows + 1, 0.0), v(cols + 1, 0.0);
  std::vector<int> p(cols + 1, 0), way(cols + 1, 0);
  for (int i = 1; i <= rows; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(cols + 1, inf);
    std::vector<char> used(cols + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= cols; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= cols; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(static_cast<std::size_t>(rows), -1);
  for (int j = 1; j <= cols; ++j)
    if (p[j] > 0) out[p[j] - 1] = j - 1;
  return out;
}

namespace {

std::vector<std::vector<int>> components(const AssociationGraph& g) {
  const int n = g.object_count();
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  std::vector<std::vector<int>> out;
  for (int s = 0; s < n; ++s) {
    if (label[s] >= 0) continue;
    const int c = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<int> stack{s};
    label[s] = c;
    while (!stack.empty()) {
      const int v = stack.back();
      stack.pop_back();
      out[c].push_back(v);
      for (int w = 0; w < n; ++w)
        if (g.adjacency(v, w) != 0.0 && label[w] < 0) {
          label[w] = c;
          stack.push_back(w);
        }
    }
    std::sort(out[c].begin(), out[c].end());
  }
  return out;
}

// Clusters one connected component; returns a cluster index per vertex
// (-1 for unplaced vertices).
std::vector<int> cluster_component(const AssociationGraph& g, const std::vector<int>& comp,
                                   const ClearConfig& cfg) {
  const int nc = static_cast<int>(comp.size());
  Eigen::MatrixXd L(nc, nc);
  for (int a = 0; a < nc; ++a) {
    const double da = g.degree[comp[a]];
    for (int b = 0; b < nc; ++b) {
      const double db = g.degree[comp[b]];
      const double lab = (a == b ? da : 0.0) - g.adjacency(comp[a], comp[b]);
      L(a, b) = lab / std::sqrt(da * db);
    }
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(L);
  int m = 0;
  for (int k = 0; k < nc; ++k) m += es.eigenvalues()[k] < cfg.eigen_threshold;
  m = std::max(1, m);

  Eigen::MatrixXd E = es.eigenvectors().leftCols(m);
  for (int a = 0; a < nc; ++a) {
    const double nrm = E.row(a).norm();
    if (nrm > 0.0) E.row(a) /= nrm;
  }

  // Farthest-point pivots: start at the lowest index, then repeatedly add the
  // vertex least similar to every pivot chosen so far.
  std::vector<int> pivots{0};
  Eigen::VectorXd best_sim = E * E.row(0).transpose();
  while (static_cast<int>(pivots.size()) < m) {
    int pick = -1;
    double lowest = std::numeric_limits<double>::infinity();
    for (int a = 0; a < nc; ++a)
      if (best_sim[a] < lowest) {
        lowest = best_sim[a];
        pick = a;
      }
    pivots.push_back(pick);
    best_sim = best_sim.cwiseMax(E * E.row(pick).transpose());
  }
  Eigen::MatrixXd C(m, E.cols());
  for (int k = 0; k < m; ++k) C.row(k) = E.row(pivots[k]);

  std::vector<int> sub(static_cast<std::size_t>(nc));
  for (int a = 0; a < nc; ++a) sub[a] = g.submap_of(comp[a]);

  std::vector<int> assign(static_cast<std::size_t>(nc), -1);
  for (int it = 0; it < std::max(1, cfg.refine_iterations); ++it) {
    const Eigen::MatrixXd S = E * C.transpose();  // nc x m
    std::vector<int> next(static_cast<std::size_t>(nc), -1);
    if (cfg.method == ClusterMethod::Greedy) {
      std::vector<std::tuple<double, int, int>> order;
      order.reserve(static_cast<std::size_t>(nc) * m);
      for (int a = 0; a < nc; ++a)
        for (int k = 0; k < m; ++k)
          if (S(a, k) >= cfg.min_similarity && S(a, k) > 0.0) order.emplace_back(-S(a, k), a, k);
      std::sort(order.begin(), order.end());
      std::vector<std::vector<int>> taken(static_cast<std::size_t>(m));  // submaps present per cluster
      for (const auto& [neg, a, k] : order) {
        if (next[a] >= 0) continue;
        auto& t = taken[k];
        if (std::find(t.begin(), t.end(), sub[a]) != t.end()) continue;
        t.push_back(sub[a]);
        next[a] = k;
      }
    } else {
      std::vector<int> members;
      for (int a = 0; a < nc;) {
        members.clear();
        const int s = sub[a];
        while (a < nc && sub[a] == s) members.push_back(a++);
        Eigen::MatrixXd cost(static_cast<int>(members.size()), m);
        for (std::size_t r = 0; r < members.size(); ++r) cost.row(static_cast<int>(r)) = -S.row(members[r]);
        const std::vector<int> col = hungarian(cost);
        for (std::size_t r = 0; r < members.size(); ++r)
          if (col[r] >= 0 && S(members[r], col[r]) >= cfg.min_similarity && S(members[r], col[r]) > 0.0)
            next[members[r]] = col[r];
      }
    }
    const bool stable = next == assign;
    assign = std::move(next);
    if (stable) break;
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(m, E.cols());
    for (int a = 0; a < nc; ++a)
      if (assign[a] >= 0) sum.row(assign[a]) += E.row(a);
    for (int k = 0; k < m; ++k) {
      const double nrm = sum.row(k).norm();
      if (nrm > 0.0) C.row(k) = sum.row(k) / nrm;
    }
  }
  return assign;
}

}  // namespace

GlobalAssociation clear_solve(std::span<const PairwiseMatch> pairwise, std::span<const int> sizes,
                              const ClearConfig& cfg) {
  const AssociationGraph g = build_aggregate(pairwise, sizes);
  std::vector<std::vector<int>> groups;
  for (const auto& comp : components(g)) {
    if (comp.size() == 1) {
      groups.push_back(comp);
      continue;
    }
    const std::vector<int> assign = cluster_component(g, comp, cfg);
    std::vector<std::vector<int>> local;
    std::vector<int> slot;
    for (std::size_t a = 0; a < comp.size(); ++a) {
      if (assign[a] < 0) {
        groups.push_back({comp[a]});
        continue;
      }
      if (assign[a] >= static_cast<int>(slot.size())) slot.resize(static_cast<std::size_t>(assign[a]) + 1, -1);
      if (slot[assign[a]] < 0) {
        slot[assign[a]] = static_cast<int>(local.size());
        local.emplace_back();
      }
      local[slot[assign[a]]].push_back(comp[a]);
    }
    for (auto& l : local) groups.push_back(std::move(l));
  }
  std::sort(groups.begin(), groups.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });

  GlobalAssociation out;
  out.universe_size = static_cast<int>(groups.size());
  out.maps.resize(sizes.size());
  for (std::size_t s = 0; s < sizes.size(); ++s) out.maps[s].assign(static_cast<std::size_t>(sizes[s]), -1);
  for (std::size_t c = 0; c < groups.size(); ++c)
    for (int v : groups[c]) {
      const int s = g.submap_of(v);
      out.maps[s][v - g.offsets[s]] = static_cast<int>(c);
    }
  return out;
}

PartialPermutation compose_pairwise(const GlobalAssociation& assoc, int s, int t) {
  const int n = static_cast<int>(assoc.maps.size());
  if (s < 0 || s >= n || t < 0 || t >= n) throw InvalidArgument("submap index out of range");
  const auto& ms = assoc.maps[s];
  const auto& mt = assoc.maps[t];
  PartialPermutation p(static_cast<int>(ms.size()), static_cast<int>(mt.size()));
  std::vector<int> where(static_cast<std::size_t>(assoc.universe_size), -1);
  for (std::size_t j = 0; j < mt.size(); ++j) where[mt[j]] = static_cast<int>(j);
  for (std::size_t i = 0; i < ms.size(); ++i)
    if (where[ms[i]] >= 0) p.set(static_cast<int>(i), where[ms[i]]);
  return p;
}

std::vector<PairwiseMatch> induced_matches(const GlobalAssociation& assoc) {
  std::vector<PairwiseMatch> out;
  const int n = static_cast<int>(assoc.maps.size());
  for (int s = 0; s < n; ++s)
    for (int t = s + 1; t < n; ++t) {
      PartialPermutation p = compose_pairwise(assoc, s, t);
      if (p.count() > 0) out.push_back({s, t, std::move(p)});
    }
  return out;
}

ConsistencyReport check_cycle_consistency(std::span<const PairwiseMatch> pairwise, std::span<const int> sizes) {
  const AssociationGraph g = build_aggregate(pairwise, sizes);
  ConsistencyReport rep;
  for (const auto& comp : components(g)) {
    bool ok = true;
    for (std::size_t a = 0; a < comp.size() && ok; ++a)
      for (std::size_t b = a + 1; b < comp.size() && ok; ++b)
        ok = g.adjacency(comp[a], comp[b]) != 0.0 && g.submap_of(comp[a]) != g.submap_of(comp[b]);
    if (ok) continue;
    rep.consistent = false;
    for (int v : comp) {
      const int s = g.submap_of(v);
      rep.witness.push_back({s, v - g.offsets[s]});
    }
    break;
  }
  return rep;
}

}  // namespace fcslam
