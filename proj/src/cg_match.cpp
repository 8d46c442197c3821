#include "fcslam/cg_match.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "fcslam/errors.hpp"
#include "fcslam/kernels.hpp"

namespace fcslam {

PartialPermutation::PartialPermutation(int source_size, int target_size) {
  if (source_size < 0 || target_size < 0) throw InvalidArgument("negative permutation size");
  fwd_.assign(static_cast<std::size_t>(source_size), -1);
  bwd_.assign(static_cast<std::size_t>(target_size), -1);
}

void PartialPermutation::set(int i, int j) {
  if (i < 0 || i >= source_size() || j < 0 || j >= target_size())
    throw InvalidArgument("permutation index out of range");
  if (fwd_[i] != -1 || bwd_[j] != -1) throw InvalidArgument("permutation must stay injective");
  fwd_[i] = j;
  bwd_[j] = i;
  ++count_;
}

std::vector<std::pair<int, int>> PartialPermutation::pairs() const {
  std::vector<std::pair<int, int>> out;
  out.reserve(static_cast<std::size_t>(count_));
  for (int i = 0; i < source_size(); ++i)
    if (fwd_[i] >= 0) out.emplace_back(i, fwd_[i]);
  return out;
}

PartialPermutation PartialPermutation::inverse() const {
  PartialPermutation inv;
  inv.fwd_ = bwd_;
  inv.bwd_ = fwd_;
  inv.count_ = count_;
  return inv;
}

PartialPermutation PartialPermutation::then(const PartialPermutation& other) const {
  if (target_size() != other.source_size()) throw InconsistentSizes("cannot compose permutations");
  PartialPermutation out(source_size(), other.target_size());
  for (int i = 0; i < source_size(); ++i)
    if (fwd_[i] >= 0 && other.fwd_[fwd_[i]] >= 0) out.set(i, other.fwd_[fwd_[i]]);
  return out;
}

std::vector<double> distance_matrix(std::span<const Point2> pts) {
  const std::size_t n = pts.size();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = i + 1; k < n; ++k) d[i * n + k] = d[k * n + i] = distance(pts[i], pts[k]);
  return d;
}

namespace {

std::vector<Point2> positions(std::span<const TreeTrack> trees) {
  std::vector<Point2> p;
  p.reserve(trees.size());
  for (const TreeTrack& t : trees) p.push_back(t.position);
  return p;
}

}  // namespace

CorrespondenceGraph build_correspondence_graph(std::span<const TreeTrack> s, std::span<const TreeTrack> t,
                                               const CgConfig& cfg) {
  CorrespondenceGraph g;
  g.epsilon = cfg.epsilon;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (cfg.radius_prefilter) {
        const double rmax = std::max(s[i].radius, t[j].radius);
        if (rmax > 0.0 && std::abs(s[i].radius - t[j].radius) / rmax >= cfg.radius_tolerance) continue;
      }
      g.src.push_back(static_cast<int>(i));
      g.dst.push_back(static_cast<int>(j));
    }
  const std::vector<double> ds = distance_matrix(positions(s));
  const std::vector<double> dt = distance_matrix(positions(t));
  g.adjacency.assign(g.src.size() * g.src.size(), 0);
  kernels::consistency_adjacency(g.src, g.dst, ds, static_cast<int>(s.size()), dt, static_cast<int>(t.size()),
                                 cfg.epsilon, g.adjacency);
  return g;
}

namespace {

class CliqueSearch {
 public:
  CliqueSearch(int n, std::span<const std::uint8_t> adj) : n_(n), words_((n + 63) / 64) {
    bits_.assign(static_cast<std::size_t>(n) * words_, 0);
    for (int u = 0; u < n; ++u)
      for (int v = 0; v < n; ++v)
        if (u != v && adj[static_cast<std::size_t>(u) * n + v]) set(row(u), v);
  }

  std::vector<int> run() {
    std::vector<int> all(static_cast<std::size_t>(n_));
    for (int v = 0; v < n_; ++v) all[v] = v;
    if (n_ > 0) expand(all);
    return best_;
  }

 private:
  std::uint64_t* row(int v) { return &bits_[static_cast<std::size_t>(v) * words_]; }
  const std::uint64_t* row(int v) const { return &bits_[static_cast<std::size_t>(v) * words_]; }
  static void set(std::uint64_t* b, int v) { b[v >> 6] |= std::uint64_t{1} << (v & 63); }
  static bool test(const std::uint64_t* b, int v) { return (b[v >> 6] >> (v & 63)) & 1u; }

  // P is sorted ascending; every vertex in P is adjacent to all of cur_.
  void expand(const std::vector<int>& P) {
    const std::size_t m = P.size();
    // Greedy colouring from the back: bound[k] bounds the clique number of
    // P[k..m).
    std::vector<int> bound(m);
    std::vector<std::vector<std::uint64_t>> classes;
    int colours = 0;
    for (std::size_t k = m; k-- > 0;) {
      const int v = P[k];
      const std::uint64_t* nv = row(v);
      std::size_t c = 0;
      for (; c < classes.size(); ++c) {
        bool clash = false;
        for (int w = 0; w < words_ && !clash; ++w) clash = (classes[c][w] & nv[w]) != 0;
        if (!clash) break;
      }
      if (c == classes.size()) classes.emplace_back(static_cast<std::size_t>(words_), 0);
      set(classes[c].data(), v);
      colours = std::max(colours, static_cast<int>(c) + 1);
      bound[k] = colours;
    }

    std::vector<int> next;
    for (std::size_t k = 0; k < m; ++k) {
      if (cur_.size() + static_cast<std::size_t>(bound[k]) <= best_.size()) return;
      const int v = P[k];
      cur_.push_back(v);
      next.clear();
      const std::uint64_t* nv = row(v);
      for (std::size_t q = k + 1; q < m; ++q)
        if (test(nv, P[q])) next.push_back(P[q]);
      if (next.empty()) {
        if (cur_.size() > best_.size()) best_ = cur_;
      } else {
        expand(std::vector<int>(next));
      }
      cur_.pop_back();
    }
  }

  int n_;
  int words_;
  std::vector<std::uint64_t> bits_;
  std::vector<int> cur_, best_;
};

bool nearly_collinear(const std::vector<Point2>& pts) {
  if (pts.size() < 3) return true;
  Point2 mu{};
  for (const Point2& p : pts) mu = mu + p;
  mu = mu * (1.0 / static_cast<double>(pts.size()));
  double sxx = 0, syy = 0, sxy = 0;
  for (const Point2& p : pts) {
    const Point2 d = p - mu;
    sxx += d.x * d.x;
    syy += d.y * d.y;
    sxy += d.x * d.y;
  }
  const double n = static_cast<double>(pts.size());
  sxx /= n;
  syy /= n;
  sxy /= n;
  const double tr = sxx + syy, det = sxx * syy - sxy * sxy;
  const double lmin = 0.5 * (tr - std::sqrt(std::max(0.0, tr * tr - 4.0 * det)));
  return std::sqrt(std::max(0.0, lmin)) <= 1e-6;
}

std::optional<PairwiseAssociation> associate_ordered(const Submap& s, const Submap& t, const CgConfig& cfg) {
  const CorrespondenceGraph g = build_correspondence_graph(s.trees, t.trees, cfg);
  const std::vector<int> clique = max_clique(g);
  if (static_cast<int>(clique.size()) < cfg.tau || clique.empty()) return std::nullopt;
  PairwiseAssociation out;
  out.matches = PartialPermutation(static_cast<int>(s.trees.size()), static_cast<int>(t.trees.size()));
  std::vector<Point2> ps, pt;
  for (int v : clique) {
    out.matches.set(g.src[v], g.dst[v]);
    ps.push_back(s.trees[g.src[v]].position);
    pt.push_back(t.trees[g.dst[v]].position);
  }
  out.transform = align_point_sets(pt.data(), ps.data(), ps.size());
  out.weak_geometry = nearly_collinear(ps) || nearly_collinear(pt);
  return out;
}

// Total order on submaps so that association does not depend on argument
// order.
bool canonical_less(const Submap& a, const Submap& b) {
  if (a.id != b.id) return a.id < b.id;
  if (a.trees.size() != b.trees.size()) return a.trees.size() < b.trees.size();
  for (std::size_t k = 0; k < a.trees.size(); ++k) {
    const TreeTrack& x = a.trees[k];
    const TreeTrack& y = b.trees[k];
    if (x.position.x != y.position.x) return x.position.x < y.position.x;
    if (x.position.y != y.position.y) return x.position.y < y.position.y;
    if (x.radius != y.radius) return x.radius < y.radius;
  }
  return false;
}

}  // namespace

std::vector<int> max_clique(int n, std::span<const std::uint8_t> adjacency) {
  if (n < 0 || adjacency.size() != static_cast<std::size_t>(n) * n) throw InvalidArgument("bad adjacency shape");
  return CliqueSearch(n, adjacency).run();
}

std::vector<int> max_clique(const CorrespondenceGraph& g) { return max_clique(g.size(), g.adjacency); }

std::optional<PairwiseAssociation> pairwise_associate(const Submap& s, const Submap& t, const CgConfig& cfg) {
  if (!canonical_less(t, s)) return associate_ordered(s, t, cfg);
  auto r = associate_ordered(t, s, cfg);
  if (!r) return r;
  r->matches = r->matches.inverse();
  r->transform = se2_inverse(r->transform);
  return r;
}

}  // namespace fcslam
