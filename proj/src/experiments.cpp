#include "fcslam/experiments.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>

#include "fcslam/errors.hpp"

namespace fcslam {

StartLayout parse_layout(const std::string& s) {
  if (s == "corner") return StartLayout::Corner;
  if (s == "boundary") return StartLayout::Boundary;
  if (s == "outer") return StartLayout::Outer;
  throw InvalidArgument("unknown start layout '" + s + "'");
}

std::string to_string(StartLayout l) {
  switch (l) {
    case StartLayout::Corner: return "corner";
    case StartLayout::Boundary: return "boundary";
    case StartLayout::Outer: return "outer";
  }
  return "corner";
}

Scenario build_scenario(const ScenarioConfig& cfg, RngSeed seed) {
  if (cfg.agents < 1) throw InvalidArgument("scenario needs at least one agent");
  if (!(cfg.width > 2.0) || !(cfg.height > 2.0)) throw InvalidArgument("scenario area must exceed 2 m per side");
  if (cfg.route_inset < 0.0 || 2.0 * cfg.route_inset >= std::min(cfg.width, cfg.height))
    throw InvalidArgument("route inset does not fit the area");

  Scenario sc;
  for (int k = 0; k < cfg.agents; ++k) {
    AgentSpec a;
    a.id = k;
    a.region = {k * cfg.width, 0.0, (k + 1) * cfg.width, cfg.height};
    const Region& r = a.region;
    if (cfg.layout == StartLayout::Corner)
      a.start = make_pose(r.xmin + 1.0, r.ymin + 1.0, kPi / 4);
    else if (cfg.layout == StartLayout::Boundary)
      a.start = make_pose(k == 0 ? r.xmax - 1.0 : r.xmin + 1.0, 0.5 * (r.ymin + r.ymax), kPi / 2);
    else
      a.start = make_pose(k == 0 ? r.xmin + 1.0 : k + 1 == cfg.agents ? r.xmax - 1.0 : 0.5 * (r.xmin + r.xmax),
                          0.5 * (r.ymin + r.ymax), kPi / 2);
    if (cfg.route_inset > 0.0) {
      const double m = cfg.route_inset;
      a.route = {{r.xmin + m, r.ymin + m}, {r.xmax - m, r.ymin + m}, {r.xmax - m, r.ymax - m}, {r.xmin + m, r.ymax - m}};
    }
    sc.agents.push_back(a);
  }
  const double m = cfg.forest_margin;
  sc.forest = generate_forest(cfg.density, {-m, -m, cfg.agents * cfg.width + m, cfg.height + m}, cfg.radius,
                              derive_seed(seed, "forest"));
  for (const AgentSpec& a : sc.agents) {
    clear_around(sc.forest, a.start.translation(), cfg.start_clearance);
    for (const Point2& p : a.route) clear_around(sc.forest, p, cfg.start_clearance);
  }
  return sc;
}

// ---------------------------------------------------------------------------

DetectionScore score_detections(std::span<const TreeDetection> detections, const Pose2& sensor_pose,
                                const Forest& forest, double match_distance, double radius_tolerance) {
  struct Pair {
    double d;
    int det, tree;
  };
  std::vector<Pair> pairs;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const Point2 c = se2_apply(sensor_pose, detections[i].circle.center);
    for (std::size_t j = 0; j < forest.trees.size(); ++j) {
      const Tree& t = forest.trees[j];
      const double d = distance(c, t.center);
      if (d >= match_distance) continue;
      if (std::abs(detections[i].circle.radius - t.radius) >= radius_tolerance * t.radius) continue;
      pairs.push_back({d, static_cast<int>(i), static_cast<int>(j)});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return a.d != b.d ? a.d < b.d : (a.det != b.det ? a.det < b.det : a.tree < b.tree);
  });
  std::vector<char> det_used(detections.size(), 0), tree_used(forest.trees.size(), 0);
  DetectionScore score;
  score.detections = static_cast<int>(detections.size());
  for (const Pair& p : pairs) {
    if (det_used[p.det] || tree_used[p.tree]) continue;
    det_used[p.det] = tree_used[p.tree] = 1;
    ++score.true_positives;
  }
  return score;
}

std::vector<DetectEvalRow> detection_eval(const DetectEvalConfig& cfg, RngSeed root) {
  if (cfg.seeds < 1) throw InvalidArgument("detection_eval needs at least one seed");
  struct Setting {
    std::string sweep;
    double sigma, density;
  };
  std::vector<Setting> settings;
  for (double s : cfg.sigmas) settings.push_back({"sigma", s, cfg.sigma_sweep_density});
  for (double d : cfg.densities) settings.push_back({"density", cfg.density_sweep_sigma, d});

  const double he = cfg.half_extent;
  std::vector<DetectEvalRow> rows;
  for (const Setting& st : settings) {
    std::vector<DetectionScore> scores(static_cast<std::size_t>(cfg.seeds));
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < cfg.seeds; ++s) {
      // The same forest seed, heading and noise stream are reused across
      // settings so sweeps compare paired scenes.
      Forest forest = generate_forest(st.density, {-he, -he, he, he}, {}, derive_seed(root, "detect-forest", s));
      clear_around(forest, {0.0, 0.0}, 1.0);
      Rng rng = make_rng(derive_seed(root, "detect-heading", s));
      const Pose2 pose = make_pose(0.0, 0.0, std::uniform_real_distribution<double>(-kPi, kPi)(rng));
      SensorModel sensor = cfg.sensor;
      sensor.range_noise_sigma = st.sigma;
      const Scan scan = simulate_scan(forest, pose, sensor, derive_seed(root, "detect-scan", s));
      const std::vector<TreeDetection> dets = detect_trees(scan, cfg.dp, cfg.gates);
      scores[s] = score_detections(dets, pose, forest, cfg.match_distance, cfg.radius_tolerance);
    }
    DetectEvalRow row{st.sweep, st.sigma, st.density};
    double sum = 0.0;
    for (const DetectionScore& sc : scores) {
      row.detections += sc.detections;
      row.true_positives += sc.true_positives;
      if (sc.detections == 0) continue;
      ++row.seeds_scored;
      sum += static_cast<double>(sc.true_positives) / sc.detections;
    }
    row.mean_precision = row.seeds_scored > 0 ? sum / row.seeds_scored : 1.0;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

GlareDescriptor view_descriptor(const Forest& forest, const Pose2& pose, const GlarotEvalConfig& cfg,
                                RngSeed seed) {
  SensorModel sensor = cfg.sensor;
  sensor.range_noise_sigma = cfg.sensor_noise;
  const Scan scan = simulate_scan(forest, pose, sensor, seed);
  std::vector<Point2> pts;
  for (const TreeDetection& d : detect_trees(scan))
    if (d.circle.center.norm() <= cfg.submap_range) pts.push_back(d.circle.center);
  GlareDescriptor g = build_glare(pts, cfg.glare);
  return cfg.normalize ? g.normalized() : g;
}

}  // namespace

std::vector<GlarotEvalRow> glarot_eval(const GlarotEvalConfig& cfg, RngSeed root) {
  if (cfg.seeds < 1) throw InvalidArgument("glarot_eval needs at least one seed");
  const double pad = cfg.submap_range + 8.0;
  std::vector<GlarotEvalRow> rows;
  for (std::size_t di = 0; di < cfg.densities.size(); ++di) {
    const double density = cfg.densities[di];
    std::vector<double> overlap(static_cast<std::size_t>(cfg.seeds)), disjoint(overlap.size());
#pragma omp parallel for schedule(dynamic)
    for (int s = 0; s < cfg.seeds; ++s) {
      const std::uint64_t idx = (static_cast<std::uint64_t>(di) << 32) | static_cast<std::uint64_t>(s);
      Rng rng = make_rng(derive_seed(root, "glarot-poses", idx));
      std::uniform_real_distribution<double> angle(-kPi, kPi), unit(0.0, 1.0);
      const Pose2 a = make_pose(0.0, 0.0, angle(rng));
      const double rr = cfg.overlap_offset * std::sqrt(unit(rng)), phi = angle(rng);
      const Pose2 b = make_pose(rr * std::cos(phi), rr * std::sin(phi), a.theta + 0.5 * kPi * (unit(rng) - 0.5));
      const Pose2 c = make_pose(cfg.disjoint_offset, 0.0, angle(rng));

      Forest forest = generate_forest(density, {-pad, -pad, cfg.disjoint_offset + pad, pad}, {},
                                      derive_seed(root, "glarot-forest", idx));
      for (const Pose2& p : {a, b, c}) clear_around(forest, p.translation(), 1.0);
      const GlareDescriptor ga = view_descriptor(forest, a, cfg, derive_seed(root, "glarot-scan-a", idx));
      const GlareDescriptor gb = view_descriptor(forest, b, cfg, derive_seed(root, "glarot-scan-b", idx));
      const GlareDescriptor gc = view_descriptor(forest, c, cfg, derive_seed(root, "glarot-scan-c", idx));
      overlap[s] = glarot_distance(ga, gb);
      disjoint[s] = glarot_distance(ga, gc);
    }
    GlarotEvalRow row;
    row.density = density;
    row.pairs = cfg.seeds;
    row.overlap_mean = std::accumulate(overlap.begin(), overlap.end(), 0.0) / cfg.seeds;
    row.disjoint_mean = std::accumulate(disjoint.begin(), disjoint.end(), 0.0) / cfg.seeds;
    rows.push_back(row);
  }
  return rows;
}

// ---------------------------------------------------------------------------

namespace {

PartialPermutation from_forward(const std::vector<int>& fwd, int target_size) {
  PartialPermutation p(static_cast<int>(fwd.size()), target_size);
  for (std::size_t i = 0; i < fwd.size(); ++i)
    if (fwd[i] >= 0) p.set(static_cast<int>(i), fwd[i]);
  return p;
}

}  // namespace

SyntheticInstance make_consistent_instance(const SyntheticAssocConfig& cfg, Rng& rng) {
  if (cfg.submaps < 2 || cfg.universe < 2) throw InvalidArgument("synthetic instance too small");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticInstance inst;
  for (int s = 0; s < cfg.submaps; ++s) {
    std::vector<int> objects;
    for (int u = 0; u < cfg.universe; ++u)
      if (unit(rng) < cfg.visibility) objects.push_back(u);
    if (objects.size() < 2) objects = {0, 1};
    std::shuffle(objects.begin(), objects.end(), rng);
    inst.sizes.push_back(static_cast<int>(objects.size()));
    inst.truth.push_back(std::move(objects));
  }
  for (int s = 0; s < cfg.submaps; ++s)
    for (int t = s + 1; t < cfg.submaps; ++t) {
      if (unit(rng) >= cfg.pair_probability) continue;
      std::vector<int> fwd(inst.truth[s].size(), -1);
      int n = 0;
      for (std::size_t i = 0; i < fwd.size(); ++i) {
        const auto& tt = inst.truth[t];
        const auto it = std::find(tt.begin(), tt.end(), inst.truth[s][i]);
        if (it == tt.end() || unit(rng) < cfg.drop) continue;
        fwd[i] = static_cast<int>(it - tt.begin());
        ++n;
      }
      if (n > 0) inst.pairwise.push_back({s, t, from_forward(fwd, inst.sizes[t])});
    }
  return inst;
}

void corrupt_matches(SyntheticInstance& inst, double fraction, Rng& rng) {
  std::vector<std::pair<int, int>> slots;  // (pairwise index, source object)
  for (std::size_t m = 0; m < inst.pairwise.size(); ++m)
    for (const auto& [i, j] : inst.pairwise[m].perm.pairs()) slots.push_back({static_cast<int>(m), i});
  const int n = static_cast<int>(std::lround(fraction * static_cast<double>(slots.size())));
  std::shuffle(slots.begin(), slots.end(), rng);
  std::vector<std::vector<int>> fwd;
  for (const PairwiseMatch& pm : inst.pairwise) {
    std::vector<int> f(static_cast<std::size_t>(pm.perm.source_size()));
    for (int i = 0; i < pm.perm.source_size(); ++i) f[i] = pm.perm.at(i);
    fwd.push_back(std::move(f));
  }
  for (int k = 0; k < n; ++k) {
    const auto [m, i] = slots[k];
    const int nt = inst.sizes[inst.pairwise[m].t];
    if (nt < 2) continue;
    auto& f = fwd[m];
    // Prefer an unused target; swap with another pair only when none is left,
    // so the matching stays injective.
    std::vector<int> unused;
    for (int j = 0; j < nt; ++j)
      if (std::find(f.begin(), f.end(), j) == f.end()) unused.push_back(j);
    if (!unused.empty()) {
      f[i] = unused[std::uniform_int_distribution<std::size_t>(0, unused.size() - 1)(rng)];
      continue;
    }
    int j = std::uniform_int_distribution<int>(0, nt - 2)(rng);
    if (j >= f[i]) ++j;
    *std::find(f.begin(), f.end(), j) = f[i];
    f[i] = j;
  }
  for (std::size_t m = 0; m < inst.pairwise.size(); ++m)
    inst.pairwise[m].perm = from_forward(fwd[m], inst.sizes[inst.pairwise[m].t]);
}

SyntheticInstance make_adversarial_instance(int submaps, int max_objects, Rng& rng) {
  if (submaps < 2 || max_objects < 1) throw InvalidArgument("adversarial instance too small");
  std::uniform_int_distribution<int> size_dist(1, max_objects);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SyntheticInstance inst;
  for (int s = 0; s < submaps; ++s) inst.sizes.push_back(size_dist(rng));
  for (int s = 0; s < submaps; ++s)
    for (int t = s + 1; t < submaps; ++t) {
      if (unit(rng) < 0.3) continue;
      std::vector<int> targets(static_cast<std::size_t>(inst.sizes[t]));
      std::iota(targets.begin(), targets.end(), 0);
      std::shuffle(targets.begin(), targets.end(), rng);
      std::vector<int> fwd(static_cast<std::size_t>(inst.sizes[s]), -1);
      const double keep = unit(rng);
      for (std::size_t i = 0; i < fwd.size() && i < targets.size(); ++i)
        if (unit(rng) < keep) fwd[i] = targets[i];
      if (std::any_of(fwd.begin(), fwd.end(), [](int v) { return v >= 0; }))
        inst.pairwise.push_back({s, t, from_forward(fwd, inst.sizes[t])});
    }
  return inst;
}

std::vector<AssocTrial> assoc_eval(const SyntheticAssocConfig& cfg, const ClearConfig& clear, int trials,
                                   RngSeed root) {
  if (trials < 1) throw InvalidArgument("assoc_eval needs at least one trial");
  std::vector<AssocTrial> out(static_cast<std::size_t>(trials));
#pragma omp parallel for schedule(dynamic)
  for (int k = 0; k < trials; ++k) {
    Rng rng = make_rng(derive_seed(root, "assoc", k));
    SyntheticInstance inst = make_consistent_instance(cfg, rng);
    AssocTrial& tr = out[k];
    tr.trial = k;
    tr.corruption = std::uniform_real_distribution<double>(cfg.corruption_min, cfg.corruption_max)(rng);
    corrupt_matches(inst, tr.corruption, rng);
    tr.input = evaluate_associations(inst.pairwise, inst.truth);
    const GlobalAssociation g = clear_solve(inst.pairwise, inst.sizes, clear);
    const std::vector<PairwiseMatch> induced = induced_matches(g);
    tr.output = evaluate_associations(induced, inst.truth);
    tr.consistent = check_cycle_consistency(induced, inst.sizes).consistent;
  }
  return out;
}

// ---------------------------------------------------------------------------

PipelineState replay_stream(std::span<const SubmapMessage> stream, const PipelineConfig& cfg) {
  PipelineState state;
  for (const SubmapMessage& m : stream) ingest_submap(state, m.bytes, cfg);
  if (!state.submaps.empty() && state.solved_submaps != static_cast<int>(state.submaps.size())) solve(state, cfg);
  return state;
}

MissionRun run_pipeline_mission(const ScenarioConfig& scenario, const MissionConfig& mission,
                                const PipelineConfig& pipeline, RngSeed seed) {
  MissionRun run;
  run.scenario = build_scenario(scenario, seed);
  MissionConfig m = mission;
  m.seed = seed;
  run.log = run_mission(run.scenario.forest, run.scenario.agents, m);
  PipelineConfig pc = pipeline;
  pc.solve_on_change = false;
  run.state = replay_stream(run.log.queue, pc);
  return run;
}

namespace {

const AgentLog& find_agent(std::span<const AgentLog> agents, int id) {
  for (const AgentLog& a : agents)
    if (a.agent == id) return a;
  throw InvalidArgument("no log for agent " + std::to_string(id));
}

}  // namespace

Pose2 solution_frame(const PipelineState& state, std::span<const AgentLog> agents, int agent) {
  if (!state.graph || state.ids.empty()) return find_agent(agents, agent).spec.start;
  int reference = state.ids.front().agent;
  for (const SubmapId& id : state.ids) reference = std::min(reference, id.agent);
  const auto& un = state.graph->unaligned_agents;
  const bool own = agent == reference || std::find(un.begin(), un.end(), agent) != un.end();
  return find_agent(agents, own ? agent : reference).spec.start;
}

AgentTrajectories agent_trajectories(const PipelineState& state, std::span<const AgentLog> agents, int agent) {
  const AgentLog& log = find_agent(agents, agent);
  std::map<int, int> index;  // sequence -> arrival index
  for (std::size_t k = 0; k < state.ids.size(); ++k)
    if (state.ids[k].agent == agent) index[state.ids[k].sequence] = static_cast<int>(k);
  const std::vector<Pose2> origins = estimated_origins(state);
  const Pose2 start = log.spec.start;
  const Pose2 frame = solution_frame(state, agents, agent);

  AgentTrajectories tr;
  tr.truth = log.truth;
  for (std::size_t k = 0; k < log.stamps.size(); ++k) {
    const Pose2 dr = se2_compose(start, log.odom[k]);
    tr.dead_reckoning.push_back(dr);
    const int seq = k < log.submap_index.size() ? log.submap_index[k] : -1;
    const auto it = index.find(seq);
    if (it == index.end()) {
      tr.corrected.push_back(dr);
      continue;
    }
    const int j = it->second;
    const Pose2 rel = se2_between(state.submaps[j].origin, log.odom[k]);
    tr.corrected.push_back(se2_compose(frame, se2_compose(origins[j], rel)));
  }
  return tr;
}

std::vector<std::vector<int>> pipeline_truth_ids(const PipelineState& state, std::span<const AgentLog> agents,
                                                 const Forest& forest) {
  std::vector<Pose2> origins;
  for (const SubmapId& id : state.ids) {
    const AgentLog& a = find_agent(agents, id.agent);
    if (id.sequence < 0 || id.sequence >= static_cast<int>(a.submap_truth.size()))
      throw MissingGroundTruth("no true origin for submap " + std::to_string(id.agent) + "/" +
                               std::to_string(id.sequence));
    origins.push_back(a.submap_truth[id.sequence]);
  }
  return true_tree_ids(state.submaps, origins, forest);
}

std::vector<SlamEvalRow> slam_eval(const ScenarioConfig& scenario, const MissionConfig& mission,
                                   const PipelineConfig& pipeline, int seeds, RngSeed root) {
  if (seeds < 1) throw InvalidArgument("slam_eval needs at least one seed");
  std::vector<SlamEvalRow> rows;
  for (int s = 0; s < seeds; ++s) {
    const MissionRun run = run_pipeline_mission(scenario, mission, pipeline, derive_seed(root, "slam-run", s));
    SlamEvalRow row;
    row.seed = s;
    row.submaps = static_cast<int>(run.state.submaps.size());
    row.associations = static_cast<int>(run.state.associations.size());
    for (const AgentLog& a : run.log.agents) {
      const AgentTrajectories tr = agent_trajectories(run.state, run.log.agents, a.agent);
      row.ate_dead_reckoning += ate(tr.dead_reckoning, tr.truth, false);
      row.ate_slam += ate(tr.corrected, tr.truth, false);
      if (!tr.truth.empty())
        row.final_drift += distance(tr.dead_reckoning.back().translation(), tr.truth.back().translation());
    }
    const double n = static_cast<double>(run.log.agents.size());
    row.ate_dead_reckoning /= n;
    row.ate_slam /= n;
    row.final_drift /= n;
    rows.push_back(row);
  }
  return rows;
}

std::vector<PlannerRow> planner_compare(const ScenarioConfig& scenario, const MissionConfig& mission, int seeds,
                                        RngSeed root) {
  if (seeds < 1) throw InvalidArgument("planner_compare needs at least one seed");
  std::vector<PlannerRow> rows;
  for (int s = 0; s < seeds; ++s) {
    const RngSeed seed = derive_seed(root, "planner-run", s);
    const Scenario sc = build_scenario(scenario, seed);
    for (PlannerKind kind : {PlannerKind::Proposed, PlannerKind::Baseline}) {
      MissionConfig m = mission;
      m.planner = kind;
      m.build_submaps = false;
      m.seed = seed;
      const MissionLog log = run_mission(sc.forest, sc.agents, m);
      const AgentLog& a = log.agents.front();
      rows.push_back({s, kind, a.completed, a.completion_time, a.distance, a.average_speed, a.moving_average_speed,
                      a.coverage.empty() ? 0.0 : a.coverage.back().fraction});
    }
  }
  return rows;
}

namespace {

bool has_inter_agent(const PipelineState& st) {
  return std::any_of(st.associations.begin(), st.associations.end(), [&](const AcceptedAssociation& a) {
    return st.ids[a.s].agent != st.ids[a.t].agent;
  });
}

}  // namespace

std::vector<FusionRow> fusion_eval(const ScenarioConfig& scenario, const MissionConfig& mission,
                                   const PipelineConfig& pipeline, int seeds, RngSeed root) {
  if (seeds < 1) throw InvalidArgument("fusion_eval needs at least one seed");
  std::vector<FusionRow> rows;
  for (int s = 0; s < seeds; ++s) {
    const RngSeed seed = derive_seed(root, "fusion-run", s);
    const Scenario sc = build_scenario(scenario, seed);
    MissionConfig m = mission;
    m.seed = seed;
    const MissionLog log = run_mission(sc.forest, sc.agents, m);
    PipelineConfig pc = pipeline;
    pc.solve_on_change = false;

    FusionRow row;
    row.seed = s;
    PipelineState st;
    for (std::size_t i = 0; i < log.queue.size(); ++i) {
      if (row.first_inter_agent_ingest >= 0) {
        ingest_submap(st, log.queue[i].bytes, pc);
        continue;
      }
      PipelineState before = st;
      ingest_submap(st, log.queue[i].bytes, pc);
      if (!has_inter_agent(st)) continue;
      row.first_inter_agent_ingest = static_cast<int>(i);
      if (!before.submaps.empty()) {
        solve(before, pc);
        row.components_before = before.graph->component_count();
      }
    }
    if (st.submaps.empty()) {
      rows.push_back(row);
      continue;
    }
    solve(st, pc);
    row.components_after = st.graph->component_count();
    for (const AcceptedAssociation& a : st.associations)
      row.inter_agent_associations += st.ids[a.s].agent != st.ids[a.t].agent;

    const auto truth = pipeline_truth_ids(st, log.agents, sc.forest);
    row.raw = evaluate_associations(raw_matches(st), truth);
    row.fused = evaluate_associations(fused_matches(st), truth);

    // Majority trunk per universe landmark, and the agent whose frame holds it.
    const int nu = st.global.universe_size;
    std::vector<std::map<int, int>> votes(static_cast<std::size_t>(nu));
    std::vector<int> owner(static_cast<std::size_t>(nu), -1);
    for (std::size_t k = 0; k < st.submaps.size(); ++k)
      for (std::size_t i = 0; i < st.global.maps[k].size(); ++i) {
        const int u = st.global.maps[k][i];
        if (owner[u] < 0) owner[u] = st.ids[k].agent;
        if (truth[k][i] >= 0) ++votes[u][truth[k][i]];
      }
    std::vector<double> errors;
    for (int u = 0; u < nu; ++u) {
      if (votes[u].empty()) continue;
      const auto best = std::max_element(votes[u].begin(), votes[u].end(),
                                         [](const auto& a, const auto& b) { return a.second < b.second; });
      const Point2 world = se2_apply(solution_frame(st, log.agents, owner[u]), st.solution->landmarks[u]);
      errors.push_back(distance(world, sc.forest.trees[best->first].center));
    }
    row.landmarks = static_cast<int>(errors.size());
    row.median_landmark_error = median(errors);
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> epsilon_sweep(const ScenarioConfig& scenario, const MissionConfig& mission,
                                    const PipelineConfig& pipeline, std::span<const double> epsilons, int seeds,
                                    RngSeed root) {
  if (seeds < 1) throw InvalidArgument("epsilon_sweep needs at least one seed");
  std::vector<SweepRow> rows;
  for (int s = 0; s < seeds; ++s) {
    const RngSeed seed = derive_seed(root, "sweep-run", s);
    const Scenario sc = build_scenario(scenario, seed);
    MissionConfig m = mission;
    m.seed = seed;
    const MissionLog log = run_mission(sc.forest, sc.agents, m);
    for (double eps : epsilons) {
      PipelineConfig pc = pipeline;
      pc.cg.epsilon = eps;
      pc.solve_on_change = false;
      const PipelineState st = replay_stream(log.queue, pc);
      SweepRow row{s, eps, {}, {}};
      if (!st.submaps.empty()) {
        const auto truth = pipeline_truth_ids(st, log.agents, sc.forest);
        row.raw = evaluate_associations(raw_matches(st), truth);
        row.fused = evaluate_associations(fused_matches(st), truth);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + mid));
}

namespace {

template <typename... Args>
void append(std::string& out, const char* fmt, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  out += buf;
}

}  // namespace

std::string to_csv(std::span<const DetectEvalRow> rows) {
  std::string out = "sweep,sigma,density,seeds_scored,mean_precision,detections,true_positives\n";
  for (const auto& r : rows)
    append(out, "%s,%.4f,%.4f,%d,%.6f,%ld,%ld\n", r.sweep.c_str(), r.sigma, r.density, r.seeds_scored,
           r.mean_precision, r.detections, r.true_positives);
  return out;
}

std::string to_csv(std::span<const GlarotEvalRow> rows) {
  std::string out = "density,pairs,overlap_mean,disjoint_mean,margin\n";
  for (const auto& r : rows)
    append(out, "%.4f,%d,%.6f,%.6f,%.6f\n", r.density, r.pairs, r.overlap_mean, r.disjoint_mean, r.margin());
  return out;
}

std::string to_csv(std::span<const AssocTrial> rows) {
  std::string out =
      "trial,corruption,input_proposed,input_correct,input_precision,output_proposed,output_correct,"
      "output_precision,consistent,improved\n";
  for (const auto& r : rows)
    append(out, "%d,%.6f,%d,%d,%.6f,%d,%d,%.6f,%d,%d\n", r.trial, r.corruption, r.input.proposed, r.input.correct,
           r.input.precision, r.output.proposed, r.output.correct, r.output.precision, r.consistent ? 1 : 0,
           r.improved() ? 1 : 0);
  return out;
}

std::string to_csv(std::span<const SlamEvalRow> rows) {
  std::string out = "seed,submaps,associations,ate_dead_reckoning,ate_slam,final_drift\n";
  for (const auto& r : rows)
    append(out, "%d,%d,%d,%.6f,%.6f,%.6f\n", r.seed, r.submaps, r.associations, r.ate_dead_reckoning, r.ate_slam,
           r.final_drift);
  return out;
}

std::string to_csv(std::span<const PlannerRow> rows) {
  std::string out = "seed,planner,completed,completion_time,distance,average_speed,moving_average_speed,coverage\n";
  for (const auto& r : rows)
    append(out, "%d,%s,%d,%.3f,%.6f,%.6f,%.6f,%.6f\n", r.seed, to_string(r.planner).c_str(), r.completed ? 1 : 0,
           r.completion_time, r.distance, r.average_speed, r.moving_average_speed, r.coverage);
  return out;
}

std::string to_csv(std::span<const FusionRow> rows) {
  std::string out =
      "seed,inter_agent_associations,first_inter_agent_ingest,components_before,components_after,landmarks,"
      "median_landmark_error,raw_proposed,raw_correct,raw_precision,fused_proposed,fused_correct,fused_precision\n";
  for (const auto& r : rows)
    append(out, "%d,%d,%d,%d,%d,%d,%.6f,%d,%d,%.6f,%d,%d,%.6f\n", r.seed, r.inter_agent_associations,
           r.first_inter_agent_ingest, r.components_before, r.components_after, r.landmarks, r.median_landmark_error,
           r.raw.proposed, r.raw.correct, r.raw.precision, r.fused.proposed, r.fused.correct, r.fused.precision);
  return out;
}

std::string to_csv(std::span<const SweepRow> rows) {
  std::string out = "seed,epsilon,raw_proposed,raw_correct,raw_precision,fused_proposed,fused_correct,fused_precision\n";
  for (const auto& r : rows)
    append(out, "%d,%.4f,%d,%d,%.6f,%d,%d,%.6f\n", r.seed, r.epsilon, r.raw.proposed, r.raw.correct, r.raw.precision,
           r.fused.proposed, r.fused.correct, r.fused.precision);
  return out;
}

}  // namespace fcslam
