#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <vector>

#include "fcslam/clear.hpp"
#include "fcslam/errors.hpp"

using namespace fcslam;

namespace {

PartialPermutation perm(int ns, int nt, const std::vector<std::pair<int, int>>& pairs) {
  PartialPermutation p(ns, nt);
  for (auto [i, j] : pairs) p.set(i, j);
  return p;
}

// Ground truth: labels[s][i] is the universe object held by object i of submap s.
struct Truth {
  std::vector<std::vector<int>> labels;
  std::vector<int> sizes;
  std::vector<PairwiseMatch> matches;
};

Truth consistent_instance(Rng& rng, int submaps, int universe, double visibility) {
  std::uniform_real_distribution<double> u(0, 1);
  Truth t;
  for (int s = 0; s < submaps; ++s) {
    std::vector<int> objs;
    for (int o = 0; o < universe; ++o)
      if (u(rng) < visibility) objs.push_back(o);
    std::shuffle(objs.begin(), objs.end(), rng);
    t.labels.push_back(objs);
    t.sizes.push_back(static_cast<int>(objs.size()));
  }
  for (int s = 0; s < submaps; ++s)
    for (int r = s + 1; r < submaps; ++r) {
      PartialPermutation p(t.sizes[s], t.sizes[r]);
      for (int i = 0; i < t.sizes[s]; ++i)
        for (int j = 0; j < t.sizes[r]; ++j)
          if (t.labels[s][i] == t.labels[r][j]) p.set(i, j);
      if (p.count() > 0) t.matches.push_back({s, r, p});
    }
  return t;
}

Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues();
}

int count_below(const Eigen::VectorXd& v, double thr) {
  return static_cast<int>((v.array() < thr).count());
}

void expect_valid(const GlobalAssociation& g, const std::vector<int>& sizes) {
  ASSERT_EQ(g.maps.size(), sizes.size());
  for (std::size_t s = 0; s < sizes.size(); ++s) {
    ASSERT_EQ(static_cast<int>(g.maps[s].size()), sizes[s]);
    std::set<int> seen;
    for (int u : g.maps[s]) {
      EXPECT_GE(u, 0);
      EXPECT_LT(u, g.universe_size);
      EXPECT_TRUE(seen.insert(u).second) << "two objects of submap " << s << " share universe id " << u;
    }
  }
}

}  // namespace

TEST(Aggregate, NoMatchesGiveZeroAdjacency) {
  const std::vector<int> sizes{2, 3};
  const AssociationGraph g = build_aggregate({}, sizes);
  EXPECT_EQ(g.object_count(), 5);
  EXPECT_EQ(g.adjacency.norm(), 0.0);
  EXPECT_EQ(g.offsets, (std::vector<int>{0, 2}));
  EXPECT_EQ(g.submap_of(3), 1);
}

TEST(Aggregate, IdentityPairGivesOffDiagonalBlocks) {
  const std::vector<int> sizes{3, 3};
  const std::vector<PairwiseMatch> m{{0, 1, perm(3, 3, {{0, 0}, {1, 1}, {2, 2}})}};
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(6, 6);
  expected.topRightCorner(3, 3) = Eigen::MatrixXd::Identity(3, 3);
  expected.bottomLeftCorner(3, 3) = Eigen::MatrixXd::Identity(3, 3);
  EXPECT_EQ(build_aggregate(m, sizes).adjacency, expected);
}

TEST(Aggregate, MatchesDirectAssembly) {
  Rng rng(81);
  std::uniform_int_distribution<int> sz(1, 5);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> sizes(4);
    for (int& s : sizes) s = sz(rng);
    std::vector<int> off{0};
    for (int s : sizes) off.push_back(off.back() + s);
    std::vector<PairwiseMatch> matches;
    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(off.back(), off.back());
    for (int s = 0; s < 4; ++s)
      for (int t = 0; t < 4; ++t) {
        if (s == t || u(rng) < 0.5) continue;
        std::vector<int> cols(sizes[t]);
        std::iota(cols.begin(), cols.end(), 0);
        std::shuffle(cols.begin(), cols.end(), rng);
        PartialPermutation p(sizes[s], sizes[t]);
        for (int i = 0; i < std::min(sizes[s], sizes[t]); ++i)
          if (u(rng) < 0.7) {
            p.set(i, cols[i]);
            expected(off[s] + i, off[t] + cols[i]) = 1;
            expected(off[t] + cols[i], off[s] + i) = 1;
          }
        matches.push_back({s, t, p});
      }
    EXPECT_EQ(build_aggregate(matches, sizes).adjacency, expected);
  }
}

TEST(Aggregate, OutOfRangeReferencesThrow) {
  const std::vector<int> sizes{2, 2};
  const std::vector<PairwiseMatch> bad{{0, 2, perm(2, 2, {{0, 0}})}};
  EXPECT_THROW(build_aggregate(bad, sizes), InconsistentSizes);
  const std::vector<PairwiseMatch> wrong_size{{0, 1, perm(3, 2, {{2, 0}})}};
  EXPECT_THROW(build_aggregate(wrong_size, sizes), InconsistentSizes);
}

TEST(Laplacian, EmptyGraphIsZero) {
  const std::vector<int> sizes{2, 1};
  EXPECT_EQ(normalized_laplacian(build_aggregate({}, sizes)).norm(), 0.0);
}

TEST(Laplacian, SingleEdgeSpectrum) {
  const std::vector<int> sizes{1, 1};
  const std::vector<PairwiseMatch> m{{0, 1, perm(1, 1, {{0, 0}})}};
  const Eigen::VectorXd ev = eigenvalues(normalized_laplacian(build_aggregate(m, sizes)));
  EXPECT_NEAR(ev(0), 0.0, 1e-12);
  EXPECT_NEAR(ev(1), 2.0, 1e-12);
}

TEST(Laplacian, DisjointCliquesGiveZeroEigenvalues) {
  Rng rng(82);
  std::uniform_int_distribution<int> span(2, 6);
  for (int c : {1, 3, 7}) {
    // Clique k holds one object in each of the first span_k submaps.
    std::vector<int> spans(c);
    for (int& s : spans) s = span(rng);
    const int submaps = *std::max_element(spans.begin(), spans.end());
    std::vector<int> sizes(submaps, 0);
    std::vector<std::vector<int>> label(submaps);
    for (int k = 0; k < c; ++k)
      for (int s = 0; s < spans[k]; ++s) {
        label[s].push_back(k);
        ++sizes[s];
      }
    std::vector<PairwiseMatch> m;
    for (int s = 0; s < submaps; ++s)
      for (int t = s + 1; t < submaps; ++t) {
        PartialPermutation p(sizes[s], sizes[t]);
        for (int i = 0; i < sizes[s]; ++i)
          for (int j = 0; j < sizes[t]; ++j)
            if (label[s][i] == label[t][j]) p.set(i, j);
        m.push_back({s, t, p});
      }
    const AssociationGraph g = build_aggregate(m, sizes);
    EXPECT_EQ(count_below(eigenvalues(laplacian(g)), 1e-9), c);
    EXPECT_EQ(count_below(eigenvalues(normalized_laplacian(g)), 1e-9), c);
    EXPECT_EQ(estimate_universe_size(normalized_laplacian(g)), c);
  }
}

TEST(UniverseSize, IdentityPairOfThree) {
  const std::vector<int> sizes{3, 3};
  const std::vector<PairwiseMatch> m{{0, 1, perm(3, 3, {{0, 0}, {1, 1}, {2, 2}})}};
  EXPECT_EQ(estimate_universe_size(normalized_laplacian(build_aggregate(m, sizes))), 3);
}

TEST(UniverseSize, IsolatedObjectsCountOnce) {
  const std::vector<int> sizes{2, 2};
  const std::vector<PairwiseMatch> m{{0, 1, perm(2, 2, {{0, 0}})}};
  EXPECT_EQ(estimate_universe_size(normalized_laplacian(build_aggregate(m, sizes))), 3);
}

TEST(UniverseSize, RobustToLightCorruption) {
  Rng rng(83);
  std::uniform_real_distribution<double> u(0, 1);
  int within = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Truth t = consistent_instance(rng, 4, 6, 0.8);
    std::set<int> present;
    for (const auto& l : t.labels) present.insert(l.begin(), l.end());
    // Re-route up to 10% of the matched pairs to a wrong partner.
    int total = 0;
    for (const auto& m : t.matches) total += m.perm.count();
    int budget = total / 10;
    for (auto& m : t.matches) {
      if (budget == 0) break;
      auto pairs = m.perm.pairs();
      if (pairs.size() < 2 || u(rng) < 0.5) continue;
      std::swap(pairs[0].second, pairs[1].second);
      PartialPermutation p(m.perm.source_size(), m.perm.target_size());
      for (auto [i, j] : pairs) p.set(i, j);
      m.perm = p;
      budget -= 2;
    }
    const int m = estimate_universe_size(normalized_laplacian(build_aggregate(t.matches, t.sizes)));
    if (std::abs(m - static_cast<int>(present.size())) <= 1) ++within;
  }
  EXPECT_EQ(within, 100);
}

TEST(ClearSolve, EmptyInputGivesSingletons) {
  const std::vector<int> sizes{2, 3, 1};
  const GlobalAssociation g = clear_solve({}, sizes);
  EXPECT_EQ(g.universe_size, 6);
  expect_valid(g, sizes);
}

TEST(ClearSolve, ConsistentInputIsRecoveredExactly) {
  Rng rng(84);
  for (int trial = 0; trial < 30; ++trial) {
    const Truth t = consistent_instance(rng, 5, 12, 0.6);
    const GlobalAssociation g = clear_solve(t.matches, t.sizes);
    expect_valid(g, t.sizes);
    const auto induced = induced_matches(g);
    ASSERT_EQ(induced.size(), t.matches.size());
    for (std::size_t k = 0; k < induced.size(); ++k) {
      EXPECT_EQ(induced[k].s, t.matches[k].s);
      EXPECT_EQ(induced[k].t, t.matches[k].t);
      EXPECT_EQ(induced[k].perm, t.matches[k].perm);
    }
  }
}

TEST(ClearSolve, BreaksSpuriousChainWithinOneSubmap) {
  // a0 - b0 - c0 - a1: the chain would fuse two objects of submap 0.
  const std::vector<int> sizes{2, 1, 1};
  const std::vector<PairwiseMatch> m{{0, 1, perm(2, 1, {{0, 0}})},
                                     {1, 2, perm(1, 1, {{0, 0}})},
                                     {0, 2, perm(2, 1, {{1, 0}})}};
  const ConsistencyReport before = check_cycle_consistency(m, sizes);
  EXPECT_FALSE(before.consistent);
  std::vector<ObjectRef> witness = before.witness;
  std::sort(witness.begin(), witness.end(),
            [](const ObjectRef& a, const ObjectRef& b) { return std::pair(a.submap, a.index) < std::pair(b.submap, b.index); });
  EXPECT_EQ(witness, (std::vector<ObjectRef>{{0, 0}, {0, 1}, {1, 0}, {2, 0}}));

  const GlobalAssociation g = clear_solve(m, sizes);
  expect_valid(g, sizes);
  EXPECT_NE(g.maps[0][0], g.maps[0][1]);
  EXPECT_TRUE(check_cycle_consistency(induced_matches(g), sizes).consistent);
}

TEST(ClearSolve, OutputIsAlwaysCycleConsistent) {
  Rng rng(85);
  std::uniform_int_distribution<int> sz(1, 6);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> sizes(5);
    for (int& s : sizes) s = sz(rng);
    std::vector<PairwiseMatch> m;
    for (int s = 0; s < 5; ++s)
      for (int t = s + 1; t < 5; ++t) {
        std::vector<int> cols(sizes[t]);
        std::iota(cols.begin(), cols.end(), 0);
        std::shuffle(cols.begin(), cols.end(), rng);
        PartialPermutation p(sizes[s], sizes[t]);
        for (int i = 0; i < std::min(sizes[s], sizes[t]); ++i)
          if (u(rng) < 0.6) p.set(i, cols[i]);
        m.push_back({s, t, p});
      }
    const GlobalAssociation g = clear_solve(m, sizes);
    expect_valid(g, sizes);
    EXPECT_TRUE(check_cycle_consistency(induced_matches(g), sizes).consistent);
  }
}

TEST(ClearSolve, HungarianClusteringAlsoConsistent) {
  Rng rng(86);
  ClearConfig cfg;
  cfg.method = ClusterMethod::Hungarian;
  for (int trial = 0; trial < 20; ++trial) {
    const Truth t = consistent_instance(rng, 4, 10, 0.7);
    const GlobalAssociation g = clear_solve(t.matches, t.sizes, cfg);
    expect_valid(g, t.sizes);
    EXPECT_TRUE(check_cycle_consistency(induced_matches(g), t.sizes).consistent);
  }
}

TEST(Compose, SelfIsIdentityAndPairsInvert) {
  Rng rng(87);
  const Truth t = consistent_instance(rng, 4, 10, 0.7);
  const GlobalAssociation g = clear_solve(t.matches, t.sizes);
  for (int s = 0; s < 4; ++s) {
    const PartialPermutation id = compose_pairwise(g, s, s);
    EXPECT_EQ(id.count(), t.sizes[s]);
    for (int i = 0; i < t.sizes[s]; ++i) EXPECT_EQ(id.at(i), i);
    for (int r = 0; r < 4; ++r) EXPECT_EQ(compose_pairwise(g, s, r).inverse(), compose_pairwise(g, r, s));
  }
}

TEST(Compose, TriplesCompose) {
  Rng rng(88);
  for (int trial = 0; trial < 20; ++trial) {
    const Truth t = consistent_instance(rng, 5, 10, 0.6);
    const GlobalAssociation g = clear_solve(t.matches, t.sizes);
    for (int a = 0; a < 5; ++a)
      for (int b = 0; b < 5; ++b)
        for (int c = 0; c < 5; ++c) {
          const PartialPermutation chained = compose_pairwise(g, a, b).then(compose_pairwise(g, b, c));
          const PartialPermutation direct = compose_pairwise(g, a, c);
          for (auto [i, k] : chained.pairs()) EXPECT_EQ(direct.at(i), k);
        }
  }
}

TEST(Consistency, ConstructedInstancesAreConsistent) {
  Rng rng(89);
  for (int trial = 0; trial < 20; ++trial) {
    const Truth t = consistent_instance(rng, 5, 10, 0.6);
    const ConsistencyReport r = check_cycle_consistency(t.matches, t.sizes);
    EXPECT_TRUE(r.consistent);
    EXPECT_TRUE(r.witness.empty());
  }
}

TEST(Consistency, OpenChainIsNotAClique) {
  // a0 - b0 - c0 without a0 - c0: one object per submap but not a clique.
  const std::vector<int> sizes{1, 1, 1};
  const std::vector<PairwiseMatch> m{{0, 1, perm(1, 1, {{0, 0}})}, {1, 2, perm(1, 1, {{0, 0}})}};
  EXPECT_FALSE(check_cycle_consistency(m, sizes).consistent);
}

TEST(Hungarian, MatchesBruteForceAssignment) {
  Rng rng(90);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 50; ++trial) {
    const int rows = 1 + trial % 5, cols = 1 + (trial / 5) % 5;
    Eigen::MatrixXd cost(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) cost(i, j) = u(rng);
    const auto a = hungarian(cost);
    ASSERT_EQ(static_cast<int>(a.size()), rows);
    double got = 0.0;
    std::set<int> used;
    for (int i = 0; i < rows; ++i)
      if (a[i] >= 0) {
        got += cost(i, a[i]);
        EXPECT_TRUE(used.insert(a[i]).second);
      }
    EXPECT_EQ(static_cast<int>(used.size()), std::min(rows, cols));
    // Brute force over injective assignments of the smaller side.
    double best = 1e300;
    std::vector<int> idx(std::max(rows, cols));
    std::iota(idx.begin(), idx.end(), 0);
    do {
      double c = 0.0;
      for (int i = 0; i < std::min(rows, cols); ++i) c += rows <= cols ? cost(i, idx[i]) : cost(idx[i], i);
      best = std::min(best, c);
    } while (std::next_permutation(idx.begin(), idx.end()));
    EXPECT_NEAR(got, best, 1e-9);
  }
}
