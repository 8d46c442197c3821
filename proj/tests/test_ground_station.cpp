#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "fcslam/errors.hpp"
#include "fcslam/ground_station.hpp"

using namespace fcslam;

namespace {

Submap make_submap(int agent, int seq, const Pose2& origin, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-8.0, 8.0), r(0.1, 0.3);
  Submap s;
  s.id = {agent, seq};
  s.origin = origin;
  for (int i = 0; i < 15; ++i) s.trees.push_back({i, {u(rng), u(rng)}, r(rng), 5});
  s.open = false;
  return s;
}

}  // namespace

TEST(Ingest, FirstSubmapHasNothingToMatch) {
  PipelineState st;
  ingest_submap(st, encode_submap(make_submap(0, 0, Pose2::identity(), 1)));
  ASSERT_EQ(st.ledger.size(), 1u);
  EXPECT_EQ(st.ledger[0].candidates, 0);
  EXPECT_EQ(st.ledger[0].accepted, 0);
  EXPECT_FALSE(st.ledger[0].solved);
  EXPECT_EQ(st.ledger[0].bytes, encoded_size(15));
  EXPECT_EQ(st.total_bytes(), encoded_size(15));
}

TEST(Ingest, DuplicateSubmapIsAssociatedAndSolved) {
  PipelineState st;
  const Submap a = make_submap(0, 0, Pose2::identity(), 2);
  Submap b = a;
  b.id = {1, 0};
  ingest_submap(st, encode_submap(a));
  ingest_submap(st, encode_submap(b));
  ASSERT_EQ(st.ledger.size(), 2u);
  EXPECT_EQ(st.ledger[1].candidates, 1);
  EXPECT_EQ(st.ledger[1].accepted, 1);
  EXPECT_TRUE(st.ledger[1].solved);
  ASSERT_EQ(st.associations.size(), 1u);
  EXPECT_EQ(st.associations[0].match.matches.count(), 15);
  const auto origins = estimated_origins(st);
  ASSERT_EQ(origins.size(), 2u);
  const Pose2 rel = se2_between(origins[0], origins[1]);
  EXPECT_NEAR(rel.x, 0.0, 1e-3);
  EXPECT_NEAR(rel.y, 0.0, 1e-3);
  EXPECT_NEAR(rel.theta, 0.0, 1e-3);
  EXPECT_TRUE(check_cycle_consistency(fused_matches(st), std::vector<int>{15, 15}).consistent);
}

TEST(Ingest, AgentsStaySeparateUntilLinked) {
  PipelineState st;
  ingest_submap(st, encode_submap(make_submap(0, 0, Pose2::identity(), 3)));
  ingest_submap(st, encode_submap(make_submap(1, 0, Pose2::identity(), 4)));
  PipelineConfig cfg;
  solve(st, cfg);
  ASSERT_TRUE(st.graph.has_value());
  EXPECT_EQ(st.graph->component_count(), 2);
  EXPECT_EQ(st.graph->unaligned_agents, (std::vector<int>{1}));
}

TEST(Ingest, MalformedPayloadLeavesStateUntouched) {
  PipelineState st;
  ingest_submap(st, encode_submap(make_submap(0, 0, Pose2::identity(), 5)));
  const std::string before = dump_state(st);
  const std::vector<std::uint8_t> junk{0x53, 0x4D, 9};
  EXPECT_THROW(ingest_submap(st, junk), MalformedPayload);
  EXPECT_EQ(dump_state(st), before);
  EXPECT_EQ(st.ledger.size(), 1u);
}

TEST(Ingest, DeferredSolve) {
  PipelineState st;
  PipelineConfig cfg;
  cfg.solve_on_change = false;
  const Submap a = make_submap(0, 0, Pose2::identity(), 6);
  Submap b = a;
  b.id = {0, 1};
  ingest_submap(st, encode_submap(a), cfg);
  ingest_submap(st, encode_submap(b), cfg);
  EXPECT_EQ(st.associations.size(), 1u);
  EXPECT_FALSE(st.solution.has_value());
  solve(st, cfg);
  EXPECT_TRUE(st.solution.has_value());
  EXPECT_EQ(st.solved_submaps, 2);
}

TEST(TransitiveAssociation, ChainsAreClosed) {
  PartialPermutation p01(1, 1), p12(1, 1);
  p01.set(0, 0);
  p12.set(0, 0);
  const std::vector<PairwiseMatch> m{{0, 1, p01}, {1, 2, p12}};
  const std::vector<int> sizes{1, 1, 1};
  const GlobalAssociation g = transitive_association(m, sizes);
  EXPECT_EQ(g.universe_size, 1);
  EXPECT_EQ(g.maps[0][0], g.maps[2][0]);
}

TEST(Scoring, AllCorrectProposals) {
  PartialPermutation p(3, 3);
  p.set(0, 1);
  p.set(2, 0);
  const std::vector<PairwiseMatch> m{{0, 1, p}};
  const std::vector<std::vector<int>> truth{{7, -1, 4}, {4, 7, 9}};
  const AssociationScore s = evaluate_associations(m, truth);
  EXPECT_EQ(s.proposed, 2);
  EXPECT_EQ(s.correct, 2);
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
}

TEST(Scoring, UnmatchedTrackIsNeverCorrect) {
  PartialPermutation p(2, 2);
  p.set(0, 0);
  p.set(1, 1);
  const std::vector<PairwiseMatch> m{{0, 1, p}};
  const std::vector<std::vector<int>> truth{{-1, 3}, {-1, 5}};
  const AssociationScore s = evaluate_associations(m, truth);
  EXPECT_EQ(s.correct, 0);
  EXPECT_DOUBLE_EQ(s.precision, 0.0);
}

TEST(Scoring, EmptyProposalHasUnitPrecision) {
  const AssociationScore s = evaluate_associations({}, {});
  EXPECT_EQ(s.proposed, 0);
  EXPECT_EQ(s.correct, 0);
  EXPECT_DOUBLE_EQ(s.precision, 1.0);
}

TEST(Scoring, MissingTruthThrows) {
  PartialPermutation p(2, 2);
  p.set(1, 1);
  const std::vector<PairwiseMatch> m{{0, 1, p}};
  EXPECT_THROW(evaluate_associations(m, {{0, 1}}), MissingGroundTruth);
  EXPECT_THROW(evaluate_associations(m, {{0}, {0, 1}}), MissingGroundTruth);
}

TEST(TrueIds, TracksMapToNearestTrunk) {
  Forest f;
  f.trees = {{{10, 0}, 0.2}, {{0, 10}, 0.2}};
  Submap s;
  s.trees = {{0, {0, -10}, 0.2, 3}, {1, {5, 5}, 0.2, 3}};
  const std::vector<Submap> subs{s};
  const std::vector<Pose2> truth{make_pose(0, 0, kPi / 2)};
  const auto ids = true_tree_ids(subs, truth, f);
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(ids[0], (std::vector<int>{0, -1}));
}

TEST(Tables, EmptyStateHasHeadersOnly) {
  const PipelineState st;
  EXPECT_EQ(payload_table(st), "index,agent,sequence,bytes,cumulative_bytes\n");
  const std::string runtime = runtime_table(st);
  EXPECT_EQ(std::count(runtime.begin(), runtime.end(), '\n'), 1);
}

TEST(Tables, PayloadIsCumulative) {
  PipelineState st;
  ingest_submap(st, encode_submap(make_submap(0, 0, Pose2::identity(), 7)));
  ingest_submap(st, encode_submap(make_submap(0, 1, make_pose(5, 0, 0), 8)));
  const std::string t = payload_table(st);
  const std::size_t one = encoded_size(15);
  EXPECT_NE(t.find("1,0,0," + std::to_string(one) + "," + std::to_string(one) + "\n"), std::string::npos);
  EXPECT_NE(t.find("2,0,1," + std::to_string(one) + "," + std::to_string(2 * one) + "\n"), std::string::npos);
}
