#include "fcslam/ground_station.hpp"

#include <algorithm>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <limits>
#include <numeric>

#include "fcslam/errors.hpp"

namespace fcslam {

std::size_t PipelineState::total_bytes() const {
  std::size_t n = 0;
  for (const IngestRecord& r : ledger) n += r.bytes;
  return n;
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<int> submap_sizes(const PipelineState& state) {
  std::vector<int> sizes;
  sizes.reserve(state.submaps.size());
  for (const Submap& s : state.submaps) sizes.push_back(static_cast<int>(s.trees.size()));
  return sizes;
}

}  // namespace

std::vector<PairwiseMatch> raw_matches(const PipelineState& state) {
  std::vector<PairwiseMatch> out;
  out.reserve(state.associations.size());
  for (const AcceptedAssociation& a : state.associations) out.push_back({a.s, a.t, a.match.matches});
  return out;
}

std::vector<PairwiseMatch> fused_matches(const PipelineState& state) {
  if (state.global.maps.empty()) return {};
  return induced_matches(state.global);
}

GlobalAssociation transitive_association(std::span<const PairwiseMatch> pairwise, std::span<const int> sizes) {
  std::vector<int> offsets(sizes.size() + 1, 0);
  for (std::size_t s = 0; s < sizes.size(); ++s) offsets[s + 1] = offsets[s] + sizes[s];
  std::vector<int> parent(static_cast<std::size_t>(offsets.back()));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const PairwiseMatch& m : pairwise) {
    if (m.s < 0 || m.t < 0 || m.s >= static_cast<int>(sizes.size()) || m.t >= static_cast<int>(sizes.size()))
      throw InconsistentSizes("match references an unknown submap");
    for (const auto& [i, j] : m.perm.pairs()) {
      if (i >= sizes[m.s] || j >= sizes[m.t]) throw InconsistentSizes("match references an unknown object");
      const int a = find(offsets[m.s] + i), b = find(offsets[m.t] + j);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  }
  GlobalAssociation g;
  std::vector<int> id_of_root(parent.size(), -1);
  g.maps.resize(sizes.size());
  for (std::size_t s = 0; s < sizes.size(); ++s)
    for (int i = 0; i < sizes[s]; ++i) {
      const int r = find(offsets[s] + i);
      if (id_of_root[r] < 0) id_of_root[r] = g.universe_size++;
      g.maps[s].push_back(id_of_root[r]);
    }
  return g;
}

void solve(PipelineState& state, const PipelineConfig& cfg) {
  IngestRecord* rec = state.ledger.empty() ? nullptr : &state.ledger.back();
  const std::vector<int> sizes = submap_sizes(state);
  const std::vector<PairwiseMatch> pairwise = raw_matches(state);

  auto t0 = Clock::now();
  GlobalAssociation global =
      cfg.use_clear ? clear_solve(pairwise, sizes, cfg.clear) : transitive_association(pairwise, sizes);
  if (rec) rec->seconds.clear += seconds_since(t0);

  t0 = Clock::now();
  std::vector<LoopClosure> closures;
  closures.reserve(state.associations.size());
  for (const AcceptedAssociation& a : state.associations) closures.push_back({a.s, a.t, a.match.transform});
  FactorGraph graph = build_graph(state.submaps, global, closures, cfg.slam);
  OptimizeResult result = optimize(graph, cfg.slam.lm);
  if (rec) {
    rec->seconds.slam += seconds_since(t0);
    rec->solved = true;
  }

  state.global = std::move(global);
  state.graph = std::move(graph);
  state.solution = std::move(result);
  state.solved_submaps = static_cast<int>(state.submaps.size());
}

void ingest_submap(PipelineState& state, std::span<const std::uint8_t> bytes, const PipelineConfig& cfg) {
  IngestRecord rec;
  auto t0 = Clock::now();
  Submap submap = decode_submap(bytes);
  rec.seconds.decode = seconds_since(t0);
  rec.id = submap.id;
  rec.bytes = bytes.size();

  t0 = Clock::now();
  GlareDescriptor desc = build_glare(submap.trees, cfg.glare);
  CandidateConfig ccfg = cfg.candidates;
  if (!cfg.use_glarot) ccfg.epsilon = std::numeric_limits<double>::infinity();
  const std::vector<LoopCandidate> candidates =
      find_candidates_against(state.descriptors, state.ids, desc, submap.id, ccfg);
  rec.seconds.glarot = seconds_since(t0);
  rec.candidates = static_cast<int>(candidates.size());

  t0 = Clock::now();
  const int index = static_cast<int>(state.submaps.size());
  std::vector<AcceptedAssociation> accepted;
  for (const LoopCandidate& c : candidates)
    if (auto m = pairwise_associate(state.submaps[c.s], submap, cfg.cg))
      accepted.push_back({c.s, index, c.distance, std::move(*m)});
  rec.seconds.cg = seconds_since(t0);
  rec.accepted = static_cast<int>(accepted.size());

  state.submaps.push_back(std::move(submap));
  state.ids.push_back(rec.id);
  state.descriptors.push_back(std::move(desc));
  for (AcceptedAssociation& a : accepted) state.associations.push_back(std::move(a));
  state.ledger.push_back(rec);
  if (!accepted.empty() && cfg.solve_on_change) solve(state, cfg);
}

std::vector<Pose2> estimated_origins(const PipelineState& state) {
  const int n = static_cast<int>(state.submaps.size());
  std::vector<Pose2> out(static_cast<std::size_t>(n));
  const int solved = state.solution ? state.solved_submaps : 0;
  for (int k = 0; k < n; ++k) {
    if (k < solved) {
      out[k] = state.solution->poses[k];
      continue;
    }
    const Submap& sk = state.submaps[k];
    int anchor = -1;
    for (int j = 0; j < solved; ++j) {
      const Submap& sj = state.submaps[j];
      if (sj.id.agent == sk.id.agent && sj.id.sequence < sk.id.sequence &&
          (anchor < 0 || sj.id.sequence > state.submaps[anchor].id.sequence))
        anchor = j;
    }
    out[k] = anchor < 0 ? sk.origin
                        : se2_compose(state.solution->poses[anchor],
                                      se2_between(state.submaps[anchor].origin, sk.origin));
  }
  return out;
}

std::vector<std::vector<int>> true_tree_ids(std::span<const Submap> submaps, std::span<const Pose2> truth_origins,
                                            const Forest& forest, double max_distance) {
  if (submaps.size() != truth_origins.size()) throw LengthMismatch("one true origin per submap is required");
  std::vector<std::vector<int>> ids(submaps.size());
  for (std::size_t k = 0; k < submaps.size(); ++k)
    for (const TreeTrack& t : submaps[k].trees) {
      const Point2 w = se2_apply(truth_origins[k], t.position);
      int best = -1;
      double bd = max_distance;
      for (std::size_t i = 0; i < forest.trees.size(); ++i) {
        const double d = distance(forest.trees[i].center, w);
        if (d < bd) {
          bd = d;
          best = static_cast<int>(i);
        }
      }
      ids[k].push_back(best);
    }
  return ids;
}

AssociationScore evaluate_associations(std::span<const PairwiseMatch> proposed,
                                       const std::vector<std::vector<int>>& truth) {
  AssociationScore score;
  for (const PairwiseMatch& m : proposed) {
    if (m.s < 0 || m.t < 0 || m.s >= static_cast<int>(truth.size()) || m.t >= static_cast<int>(truth.size()))
      throw MissingGroundTruth("no ground truth for submap pair " + std::to_string(m.s) + "," + std::to_string(m.t));
    for (const auto& [i, j] : m.perm.pairs()) {
      if (i >= static_cast<int>(truth[m.s].size()) || j >= static_cast<int>(truth[m.t].size()))
        throw MissingGroundTruth("no ground truth for an object of submap pair " + std::to_string(m.s) + "," +
                                 std::to_string(m.t));
      ++score.proposed;
      const int a = truth[m.s][i], b = truth[m.t][j];
      if (a >= 0 && a == b) ++score.correct;
    }
  }
  score.precision = score.proposed == 0 ? 1.0 : static_cast<double>(score.correct) / score.proposed;
  return score;
}

std::string payload_table(const PipelineState& state) {
  std::string out = "index,agent,sequence,bytes,cumulative_bytes\n";
  std::size_t total = 0;
  char buf[128];
  for (std::size_t k = 0; k < state.ledger.size(); ++k) {
    const IngestRecord& r = state.ledger[k];
    total += r.bytes;
    std::snprintf(buf, sizeof buf, "%zu,%d,%d,%zu,%zu\n", k + 1, r.id.agent, r.id.sequence, r.bytes, total);
    out += buf;
  }
  return out;
}

std::string runtime_table(const PipelineState& state) {
  std::string out = "index,glarot,cg,clear,slam\n";
  StageSeconds acc;
  char buf[160];
  for (std::size_t k = 0; k < state.ledger.size(); ++k) {
    const StageSeconds& s = state.ledger[k].seconds;
    acc.glarot += s.glarot;
    acc.cg += s.cg;
    acc.clear += s.clear;
    acc.slam += s.slam;
    std::snprintf(buf, sizeof buf, "%zu,%.6f,%.6f,%.6f,%.6f\n", k + 1, acc.glarot, acc.cg, acc.clear, acc.slam);
    out += buf;
  }
  return out;
}

std::string dump_state(const PipelineState& state) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "submaps %zu\n", state.submaps.size());
  out += buf;
  for (const Submap& s : state.submaps) {
    std::snprintf(buf, sizeof buf, "submap %d %d %zu %.17g %.17g %.17g\n", s.id.agent, s.id.sequence, s.trees.size(),
                  s.origin.x, s.origin.y, s.origin.theta);
    out += buf;
  }
  for (const AcceptedAssociation& a : state.associations) {
    std::snprintf(buf, sizeof buf, "assoc %d %d %.17g %.17g %.17g %.17g %d", a.s, a.t, a.glarot,
                  a.match.transform.x, a.match.transform.y, a.match.transform.theta, a.match.weak_geometry ? 1 : 0);
    out += buf;
    for (const auto& [i, j] : a.match.matches.pairs()) out += " " + std::to_string(i) + ":" + std::to_string(j);
    out += "\n";
  }
  out += "universe " + std::to_string(state.global.universe_size) + "\n";
  for (const auto& row : state.global.maps) {
    out += "map";
    for (int c : row) out += " " + std::to_string(c);
    out += "\n";
  }
  if (state.solution) {
    std::snprintf(buf, sizeof buf, "solution %d %.17g %d %s\n", state.solved_submaps, state.solution->final_cost,
                  state.solution->iterations, state.solution->stop_reason.c_str());
    out += buf;
    for (const Pose2& p : state.solution->poses) {
      std::snprintf(buf, sizeof buf, "pose %.17g %.17g %.17g\n", p.x, p.y, p.theta);
      out += buf;
    }
    for (const Point2& l : state.solution->landmarks) {
      std::snprintf(buf, sizeof buf, "landmark %.17g %.17g\n", l.x, l.y);
      out += buf;
    }
  }
  return out;
}

}  // namespace fcslam
