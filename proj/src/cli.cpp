#include "fcslam/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "fcslam/config.hpp"
#include "fcslam/errors.hpp"
#include "fcslam/experiments.hpp"
#include "fcslam/ground_station.hpp"
#include "fcslam/mission.hpp"

namespace fcslam {

namespace {

// Options every subcommand accepts.
struct CommonOptions {
  std::string preset = "default";
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--preset", o.preset, "starting configuration")
      ->check(CLI::IsMember(preset_names()))
      ->capture_default_str();
  cmd->add_option("--config", o.config_file, "key = value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.overrides, "override one key, as key=value (repeatable)");
  cmd->add_option("--seed", o.seed, "top-level seed");
}

AppConfig resolve(const CommonOptions& o) {
  AppConfig cfg = preset(o.preset);
  ConfigRegistry reg(cfg);
  if (!o.config_file.empty()) load_config_file(reg, o.config_file);
  for (const std::string& kv : o.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ParseError("--set expects key=value, got '" + kv + "'");
    reg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.seed) cfg.seed = *o.seed;
  sync_shared(cfg);
  return cfg;
}

void write_text(const std::filesystem::path& file, const std::string& text) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream os(file, std::ios::binary);
  if (!os) throw Error("cannot write " + file.string());
  os << text;
  if (!os) throw Error("write failed for " + file.string());
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Region parse_region(const std::string& s) {
  const auto x = s.find('x');
  if (x == std::string::npos) throw ParseError("region must look like WxH, got '" + s + "'");
  try {
    std::size_t a = 0, b = 0;
    const double w = std::stod(s.substr(0, x), &a), h = std::stod(s.substr(x + 1), &b);
    if (a != x || b != s.size() - x - 1 || !(w > 0.0) || !(h > 0.0)) throw std::invalid_argument(s);
    return {0.0, 0.0, w, h};
  } catch (const std::logic_error&) {
    throw ParseError("region must look like WxH with positive sizes, got '" + s + "'");
  }
}

// Truth read back from a mission directory.
struct LogTruth {
  std::vector<AgentLog> agents;  // agent id, start pose and submap truth only
  Forest forest;
};

LogTruth read_log_truth(const std::filesystem::path& dir) {
  LogTruth t;
  {
    std::istringstream in(read_text(dir / "forest.txt"));
    t.forest = read_forest(in);
  }
  std::istringstream in(read_text(dir / "submap_truth.csv"));
  std::string line;
  std::getline(in, line);
  std::map<int, std::vector<std::pair<int, Pose2>>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    int agent = 0, seq = 0;
    Pose2 p;
    if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%lf", &agent, &seq, &p.x, &p.y, &p.theta) != 5)
      throw ParseError("bad submap_truth.csv line: " + line);
    rows[agent].push_back({seq, p});
  }
  for (auto& [agent, list] : rows) {
    AgentLog a;
    a.agent = agent;
    std::sort(list.begin(), list.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    for (std::size_t k = 0; k < list.size(); ++k) {
      if (list[k].first != static_cast<int>(k)) throw ParseError("submap_truth.csv has gaps");
      a.submap_truth.push_back(list[k].second);
    }
    a.spec.id = agent;
    a.spec.start = a.submap_truth.front();  // the first submap opens at the start pose
    t.agents.push_back(std::move(a));
  }
  return t;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// Precision, payload and origin ATE of a replayed mission against its truth.
std::string evaluation_table(const PipelineState& st, const LogTruth& truth) {
  EvalReport rep;
  rep.payload_bytes = st.total_bytes();
  for (const IngestRecord& r : st.ledger) {
    rep.runtime.glarot += r.seconds.glarot;
    rep.runtime.cg += r.seconds.cg;
  }
  if (!st.submaps.empty()) {
    const auto ids = pipeline_truth_ids(st, truth.agents, truth.forest);
    rep.raw = evaluate_associations(raw_matches(st), ids);
    rep.fused = evaluate_associations(fused_matches(st), ids);
    const std::vector<Pose2> est = estimated_origins(st);
    std::vector<Pose2> dr, sl, gt;
    for (std::size_t k = 0; k < st.submaps.size(); ++k) {
      const SubmapId& id = st.ids[k];
      const AgentLog* a = nullptr;
      for (const AgentLog& x : truth.agents)
        if (x.agent == id.agent) a = &x;
      if (!a || id.sequence >= static_cast<int>(a->submap_truth.size()))
        throw MissingGroundTruth("no truth for submap " + std::to_string(id.agent) + "/" + std::to_string(id.sequence));
      gt.push_back(a->submap_truth[id.sequence]);
      dr.push_back(se2_compose(a->spec.start, st.submaps[k].origin));
      sl.push_back(se2_compose(solution_frame(st, truth.agents, id.agent), est[k]));
    }
    rep.ate_dead_reckoning = ate(dr, gt, false);
    rep.ate_slam = ate(sl, gt, false);
  }
  std::string out = "metric,value\n";
  out += "submaps," + std::to_string(st.submaps.size()) + "\n";
  out += "associations," + std::to_string(st.associations.size()) + "\n";
  out += "payload_bytes," + std::to_string(rep.payload_bytes) + "\n";
  out += "raw_proposed," + std::to_string(rep.raw.proposed) + "\n";
  out += "raw_correct," + std::to_string(rep.raw.correct) + "\n";
  out += "raw_precision," + fmt("%.6f", rep.raw.precision) + "\n";
  out += "fused_proposed," + std::to_string(rep.fused.proposed) + "\n";
  out += "fused_correct," + std::to_string(rep.fused.correct) + "\n";
  out += "fused_precision," + fmt("%.6f", rep.fused.precision) + "\n";
  out += "origin_ate_dead_reckoning," + fmt("%.6f", rep.ate_dead_reckoning) + "\n";
  out += "origin_ate_slam," + fmt("%.6f", rep.ate_slam) + "\n";
  return out;
}

// Machine-parseable failure line; `kind` is the error class name.
int fail(std::ostream& err, int code, const std::string& kind, const std::string& message) {
  err << "error: kind=" << kind << " exit=" << code << " message=" << message << "\n";
  return code;
}

int fail_library(std::ostream& err, int code, const Error& e) {
  const std::string what = e.what();
  const auto colon = what.find(": ");
  if (colon == std::string::npos) return fail(err, code, "Error", what);
  return fail(err, code, what.substr(0, colon), what.substr(colon + 2));
}

}  // namespace

int cli_dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Forest collaborative SLAM simulator and evaluation tool", "fcslam"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  CommonOptions common;
  std::string out_path, log_dir, forest_file, planner, region = "20x20", mode = "synthetic", config_dump;
  double density = 0.2;
  std::optional<int> seeds;
  bool dump_only = false;

  CLI::App* forest_gen = app.add_subcommand("forest-gen", "generate a Poisson forest file");
  add_common(forest_gen, common);
  forest_gen->add_option("--density", density, "trees per square meter")->check(CLI::NonNegativeNumber);
  forest_gen->add_option("--region", region, "area as WxH meters, origin at (0, 0)")->capture_default_str();
  forest_gen->add_option("--out", out_path, "forest file")->required();

  CLI::App* mission = app.add_subcommand("mission", "run one exploration mission and write its log");
  add_common(mission, common);
  mission->add_option("--planner", planner, "proposed or baseline")->check(CLI::IsMember({"proposed", "baseline"}));
  mission->add_option("--forest", forest_file, "use this forest instead of generating one")
      ->check(CLI::ExistingFile);
  mission->add_option("--out", out_path, "log directory")->required();

  CLI::App* detect = app.add_subcommand("detect-eval", "tree detection precision sweeps over noise and density");
  add_common(detect, common);
  detect->add_option("--seeds", seeds, "scenes per setting")->check(CLI::PositiveNumber);
  detect->add_option("--out", out_path, "CSV file")->required();

  CLI::App* glarot = app.add_subcommand("glarot-eval", "descriptor distance of overlapping vs disjoint views");
  add_common(glarot, common);
  glarot->add_option("--seeds", seeds, "view pairs per density")->check(CLI::PositiveNumber);
  glarot->add_option("--out", out_path, "CSV file")->required();

  CLI::App* assoc = app.add_subcommand("assoc-eval", "multiway association on synthetic or mission data");
  add_common(assoc, common);
  assoc->add_option("--mode", mode, "synthetic or sweep")->check(CLI::IsMember({"synthetic", "sweep"}))
      ->capture_default_str();
  assoc->add_option("--seeds", seeds, "trials (synthetic) or missions (sweep)")->check(CLI::PositiveNumber);
  assoc->add_option("--out", out_path, "CSV file")->required();

  CLI::App* slam = app.add_subcommand("slam-eval", "trajectory error with and without the back end");
  add_common(slam, common);
  slam->add_option("--seeds", seeds, "missions")->check(CLI::PositiveNumber);
  slam->add_option("--out", out_path, "CSV file")->required();

  CLI::App* planner_eval = app.add_subcommand("planner-eval", "paired proposed vs baseline exploration runs");
  add_common(planner_eval, common);
  planner_eval->add_option("--seeds", seeds, "paired missions")->check(CLI::PositiveNumber);
  planner_eval->add_option("--out", out_path, "CSV file")->required();

  CLI::App* fusion = app.add_subcommand("fusion-eval", "multi-agent map fusion against ground truth");
  add_common(fusion, common);
  fusion->add_option("--seeds", seeds, "missions")->check(CLI::PositiveNumber);
  fusion->add_option("--out", out_path, "CSV file")->required();

  CLI::App* replay = app.add_subcommand("pipeline-replay", "feed a recorded submap stream to the ground station");
  add_common(replay, common);
  replay->add_option("--log", log_dir, "mission log directory")->required()->check(CLI::ExistingDirectory);
  replay->add_option("--out", out_path, "output directory")->required();

  CLI::App* report = app.add_subcommand("report", "payload, runtime and accuracy tables for a mission log");
  add_common(report, common);
  report->add_option("--log", log_dir, "mission log directory")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", out_path, "output directory")->required();

  CLI::App* config = app.add_subcommand("config", "print the resolved configuration");
  add_common(config, common);
  config->add_flag("--keys", dump_only, "list keys only");

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  if (!argv_rev.empty()) argv_rev.pop_back();  // program name
  try {
    app.parse(argv_rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    return fail(err, kExitUsage, "UsageError", e.what());
  }

  AppConfig cfg;
  try {
    cfg = resolve(common);
  } catch (const ParseError& e) {
    return fail_library(err, kExitUsage, e);
  }
  const RngSeed root{cfg.seed};

  try {
    if (forest_gen->parsed()) {
      const Region r = parse_region(region);
      std::ostringstream os;
      write_forest(os, generate_forest(density, r, cfg.scenario.radius, derive_seed(root, "forest")));
      write_text(out_path, os.str());
    } else if (mission->parsed()) {
      if (!planner.empty()) cfg.mission.planner = parse_planner(planner);
      Scenario sc = build_scenario(cfg.scenario, root);
      if (!forest_file.empty()) {
        std::istringstream in(read_text(forest_file));
        sc.forest = read_forest(in);
        for (const AgentSpec& a : sc.agents) clear_around(sc.forest, a.start.translation(), cfg.scenario.start_clearance);
      }
      MissionConfig m = cfg.mission;
      m.seed = root;
      const MissionLog log = run_mission(sc.forest, sc.agents, m);
      write_mission_log(log, out_path);
      std::ostringstream fs;
      write_forest(fs, sc.forest);
      write_text(std::filesystem::path(out_path) / "forest.txt", fs.str());
      ConfigRegistry reg(cfg);
      write_text(std::filesystem::path(out_path) / "config.txt", reg.dump());
    } else if (detect->parsed()) {
      if (seeds) cfg.detect_eval.seeds = *seeds;
      const auto rows = detection_eval(cfg.detect_eval, root);
      write_text(out_path, to_csv(rows));
    } else if (glarot->parsed()) {
      if (seeds) cfg.glarot_eval.seeds = *seeds;
      const auto rows = glarot_eval(cfg.glarot_eval, root);
      write_text(out_path, to_csv(rows));
    } else if (assoc->parsed()) {
      if (mode == "synthetic") {
        const auto rows = assoc_eval(cfg.assoc_eval, cfg.pipeline.clear, seeds.value_or(cfg.assoc_trials), root);
        write_text(out_path, to_csv(rows));
      } else {
        const auto rows = epsilon_sweep(cfg.scenario, cfg.mission, cfg.pipeline, cfg.sweep_epsilons,
                                        seeds.value_or(cfg.seeds), root);
        write_text(out_path, to_csv(rows));
      }
    } else if (slam->parsed()) {
      const auto rows = slam_eval(cfg.scenario, cfg.mission, cfg.pipeline, seeds.value_or(cfg.seeds), root);
      write_text(out_path, to_csv(rows));
    } else if (planner_eval->parsed()) {
      const auto rows = planner_compare(cfg.scenario, cfg.mission, seeds.value_or(cfg.seeds), root);
      write_text(out_path, to_csv(rows));
    } else if (fusion->parsed()) {
      const auto rows = fusion_eval(cfg.scenario, cfg.mission, cfg.pipeline, seeds.value_or(cfg.seeds), root);
      write_text(out_path, to_csv(rows));
    } else if (replay->parsed()) {
      const auto stream = read_submap_stream(std::filesystem::path(log_dir) / "submaps.bin");
      const PipelineState st = replay_stream(stream, cfg.pipeline);
      const std::filesystem::path dir(out_path);
      write_text(dir / "state.txt", dump_state(st));
      write_text(dir / "payload.csv", payload_table(st));
      write_text(dir / "runtime.csv", runtime_table(st));
    } else if (report->parsed()) {
      const std::filesystem::path in(log_dir), dir(out_path);
      const LogTruth truth = read_log_truth(in);
      const auto stream = read_submap_stream(in / "submaps.bin");
      const PipelineState st = replay_stream(stream, cfg.pipeline);
      write_text(dir / "report.csv", evaluation_table(st, truth));
      write_text(dir / "payload.csv", payload_table(st));
      write_text(dir / "runtime.csv", runtime_table(st));
    } else if (config->parsed()) {
      ConfigRegistry reg(cfg);
      if (dump_only)
        for (const std::string& k : reg.keys()) out << k << "\n";
      else
        out << reg.dump();
    }
  } catch (const ParseError& e) {
    return fail_library(err, kExitRuntime, e);
  } catch (const Error& e) {
    return fail_library(err, kExitRuntime, e);
  } catch (const std::exception& e) {
    return fail(err, kExitRuntime, "Exception", e.what());
  }
  return kExitOk;
}

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  return cli_dispatch(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace fcslam
