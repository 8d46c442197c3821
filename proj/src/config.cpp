#include "fcslam/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fcslam/errors.hpp"

namespace fcslam {

AppConfig::AppConfig() { mission.sensor.range_noise_sigma = 0.005; }

AppConfig preset(const std::string& name) {
  AppConfig c;
  if (name == "default") return c;
  if (name == "planner") {
    // A short mapping range keeps coverage frontier-driven in a 20 m area.
    c.mission.build_submaps = false;
    c.mission.map_range = 4.0;
    return c;
  }
  // Drift shared by the mission-level SLAM presets: small per-step noise plus
  // a heading bias per travelled meter.
  c.mission.drift.translation_sigma = 0.001;
  c.mission.drift.rotation_sigma = 0.0002;
  c.mission.drift.bias_per_meter = {0.0, 0.0, 0.0005};
  c.pipeline.use_glarot = false;
  if (name == "slam") {
    c.scenario.route_inset = 3.0;
    c.mission.cruise_speed = 1.0;
    c.mission.duration_cap = 300.0;
    return c;
  }
  if (name == "fusion") {
    c.seeds = 5;
    c.scenario.agents = 2;
    c.scenario.layout = StartLayout::Outer;
    return c;
  }
  throw ParseError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() { return {"default", "planner", "slam", "fusion"}; }

void sync_shared(AppConfig& cfg) {
  cfg.detect_eval.dp = cfg.mission.dp;
  cfg.detect_eval.gates = cfg.mission.gates;
  const double noise = cfg.detect_eval.sensor.range_noise_sigma;
  cfg.detect_eval.sensor = cfg.mission.sensor;
  cfg.detect_eval.sensor.range_noise_sigma = noise;
  cfg.glarot_eval.sensor = cfg.mission.sensor;
  cfg.glarot_eval.glare = cfg.pipeline.glare;
  cfg.glarot_eval.normalize = cfg.pipeline.candidates.normalize;
}

// ---------------------------------------------------------------------------
// Value codecs

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& v, const char* what) {
  throw ParseError("'" + v + "' is not " + what);
}

template <typename T>
T parse_integer(const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || p != v.data() + v.size()) bad_value(v, "an integer in range");
  return out;
}

double parse_double(const std::string& v) {
  // strtod accepts the forms the dump writes, including inf.
  if (v.empty()) bad_value(v, "a number");
  char* end = nullptr;
  const double out = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size()) bad_value(v, "a number");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(v, "a boolean");
}

std::string format_double(double v) {
  // Shortest representation that reads back to the same value.
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_list(const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(trim(item)));
  if (out.empty()) bad_value(v, "a comma-separated list of numbers");
  return out;
}

std::string format_list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_double(v[i]);
  return out;
}

}  // namespace

template <typename T>
void ConfigRegistry::bind(const std::string& key, T& field) {
  T* f = &field;
  if constexpr (std::is_same_v<T, bool>) {
    bind_custom(key, [f](const std::string& v) { *f = parse_bool(v); },
                [f] { return std::string(*f ? "true" : "false"); });
  } else if constexpr (std::is_integral_v<T>) {
    bind_custom(key, [f](const std::string& v) { *f = parse_integer<T>(v); }, [f] { return std::to_string(*f); });
  } else if constexpr (std::is_same_v<T, double>) {
    bind_custom(key, [f](const std::string& v) { *f = parse_double(v); }, [f] { return format_double(*f); });
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    bind_custom(key, [f](const std::string& v) { *f = parse_list(v); }, [f] { return format_list(*f); });
  } else {
    static_assert(sizeof(T) == 0, "unsupported config field type");
  }
}

void ConfigRegistry::bind_custom(const std::string& key, std::function<void(const std::string&)> set,
                                 std::function<std::string()> get) {
  entries_.push_back({key, std::move(set), std::move(get)});
}

ConfigRegistry::ConfigRegistry(AppConfig& c) {
  bind("seed", c.seed);
  bind("experiment.seeds", c.seeds);

  ScenarioConfig& sc = c.scenario;
  bind("scenario.agents", sc.agents);
  bind("scenario.width", sc.width);
  bind("scenario.height", sc.height);
  bind("scenario.density", sc.density);
  bind("scenario.forest_margin", sc.forest_margin);
  bind_custom("scenario.layout", [&sc](const std::string& v) {
    try {
      sc.layout = parse_layout(v);
    } catch (const InvalidArgument&) {
      bad_value(v, "corner, boundary or outer");
    }
  }, [&sc] { return to_string(sc.layout); });
  bind("scenario.start_clearance", sc.start_clearance);
  bind("scenario.radius_min", sc.radius.min);
  bind("scenario.radius_max", sc.radius.max);
  bind("scenario.route_inset", sc.route_inset);

  MissionConfig& m = c.mission;
  bind("sensor.max_range", m.sensor.max_range);
  bind("sensor.fov", m.sensor.fov);
  bind("sensor.angular_resolution", m.sensor.angular_resolution);
  bind("sensor.range_noise_sigma", m.sensor.range_noise_sigma);
  bind("vehicle.v_max", m.limits.v_max);
  bind("vehicle.a_max", m.limits.a_max);
  bind("vehicle.yaw_rate_max", m.limits.yaw_rate_max);
  bind("mission.dt", m.dt);
  bind("mission.duration_cap", m.duration_cap);
  bind_custom("mission.planner", [&m](const std::string& v) {
    try {
      m.planner = parse_planner(v);
    } catch (const InvalidArgument&) {
      bad_value(v, "proposed or baseline");
    }
  }, [&m] { return to_string(m.planner); });
  bind("mission.cruise_speed", m.cruise_speed);
  bind("mission.lookahead", m.lookahead);
  bind("mission.full_turn_angle", m.full_turn_angle);
  bind("mission.arrive_radius", m.arrive_radius);
  bind("mission.min_frontier_cells", m.min_frontier_cells);
  bind("mission.grid_resolution", m.grid_resolution);
  bind("mission.map_range", m.map_range);
  bind("mission.map_margin", m.map_margin);
  bind("mission.map_every", m.map_every);
  bind("mission.plan_every", m.plan_every);
  bind("mission.build_submaps", m.build_submaps);
  bind("mission.detect_every", m.detect_every);
  bind("mission.detection_range", m.detection_range);
  bind_custom("mission.odometry", [&m](const std::string& v) {
    if (v == "truth")
      m.odometry = OdometrySource::Truth;
    else if (v == "icp")
      m.odometry = OdometrySource::Icp;
    else
      bad_value(v, "truth or icp");
  }, [&m] { return std::string(m.odometry == OdometrySource::Truth ? "truth" : "icp"); });
  bind("planner.lambda", m.planner_cfg.lambda);
  bind("planner.switch_margin", m.planner_cfg.switch_margin);
  bind("planner.safety_radius", m.planner_cfg.safety_radius);

  bind("detect.dp_lambda", m.dp.penalty_lambda);
  bind("detect.dp_max_iterations", m.dp.max_iterations);
  bind("detect.max_residual", m.gates.max_residual);
  bind("detect.min_radius", m.gates.min_radius);
  bind("detect.min_coverage", m.gates.min_coverage);
  bind("detect.algebraic_gate", m.gates.algebraic_gate);
  bind("detect.min_points", m.gates.min_points);

  bind("submap.period", m.submap.period);
  bind("submap.tau_cull", m.submap.tau_cull);
  bind("submap.merge_distance", m.submap.tracking.merge_distance);
  bind("submap.radius_tolerance", m.submap.tracking.radius_tolerance);
  bind("submap.occupancy_half_extent", m.submap.occupancy_half_extent);
  bind("submap.occupancy_resolution", m.submap.occupancy_resolution);

  bind("icp.max_iterations", m.icp.max_iterations);
  bind("icp.convergence_tol", m.icp.convergence_tol);
  bind("icp.correspondence_cutoff", m.icp.correspondence_cutoff);
  bind("icp.min_inlier_fraction", m.icp.min_inlier_fraction);
  bind("icp.trim_factor", m.icp.trim_factor);

  bind("drift.translation_sigma", m.drift.translation_sigma);
  bind("drift.rotation_sigma", m.drift.rotation_sigma);
  bind("drift.bias_x", m.drift.bias_per_meter.x);
  bind("drift.bias_y", m.drift.bias_per_meter.y);
  bind("drift.bias_theta", m.drift.bias_per_meter.theta);

  PipelineConfig& p = c.pipeline;
  bind("glare.n_rho", p.glare.n_rho);
  bind("glare.n_theta", p.glare.n_theta);
  bind("glare.rho_max", p.glare.rho_max);
  bind("glare.blur_sigma", p.glare.blur_sigma);
  bind("glarot.enabled", p.use_glarot);
  bind("glarot.epsilon", p.candidates.epsilon);
  bind("glarot.normalize", p.candidates.normalize);
  bind("glarot.exclude_consecutive", p.candidates.exclude_consecutive);
  bind("cg.epsilon", p.cg.epsilon);
  bind("cg.tau", p.cg.tau);
  bind("cg.radius_prefilter", p.cg.radius_prefilter);
  bind("cg.radius_tolerance", p.cg.radius_tolerance);
  bind("clear.enabled", p.use_clear);
  bind("clear.eigen_threshold", p.clear.eigen_threshold);
  bind_custom("clear.method", [&p](const std::string& v) {
    if (v == "greedy")
      p.clear.method = ClusterMethod::Greedy;
    else if (v == "hungarian")
      p.clear.method = ClusterMethod::Hungarian;
    else
      bad_value(v, "greedy or hungarian");
  }, [&p] { return std::string(p.clear.method == ClusterMethod::Greedy ? "greedy" : "hungarian"); });
  bind("clear.refine_iterations", p.clear.refine_iterations);
  bind("clear.min_similarity", p.clear.min_similarity);
  bind("slam.odom_sigma_xy", p.slam.odom_sigma_xy);
  bind("slam.odom_sigma_theta", p.slam.odom_sigma_theta);
  bind("slam.observation_sigma", p.slam.observation_sigma);
  bind("slam.anchor_information", p.slam.anchor_information);
  bind("lm.max_iterations", p.slam.lm.max_iterations);
  bind("lm.relative_cost_tol", p.slam.lm.relative_cost_tol);
  bind("lm.gradient_tol", p.slam.lm.gradient_tol);
  bind("lm.initial_lambda", p.slam.lm.initial_lambda);
  bind("pipeline.solve_on_change", p.solve_on_change);

  DetectEvalConfig& d = c.detect_eval;
  bind("detect_eval.seeds", d.seeds);
  bind("detect_eval.sigmas", d.sigmas);
  bind("detect_eval.densities", d.densities);
  bind("detect_eval.sigma_sweep_density", d.sigma_sweep_density);
  bind("detect_eval.density_sweep_sigma", d.density_sweep_sigma);
  bind("detect_eval.half_extent", d.half_extent);
  bind("detect_eval.match_distance", d.match_distance);
  bind("detect_eval.radius_tolerance", d.radius_tolerance);

  GlarotEvalConfig& g = c.glarot_eval;
  bind("glarot_eval.seeds", g.seeds);
  bind("glarot_eval.densities", g.densities);
  bind("glarot_eval.submap_range", g.submap_range);
  bind("glarot_eval.overlap_offset", g.overlap_offset);
  bind("glarot_eval.disjoint_offset", g.disjoint_offset);
  bind("glarot_eval.sensor_noise", g.sensor_noise);

  SyntheticAssocConfig& a = c.assoc_eval;
  bind("assoc_eval.trials", c.assoc_trials);
  bind("assoc_eval.submaps", a.submaps);
  bind("assoc_eval.universe", a.universe);
  bind("assoc_eval.visibility", a.visibility);
  bind("assoc_eval.pair_probability", a.pair_probability);
  bind("assoc_eval.drop", a.drop);
  bind("assoc_eval.corruption_min", a.corruption_min);
  bind("assoc_eval.corruption_max", a.corruption_max);
  bind("assoc_eval.sweep_epsilons", c.sweep_epsilons);
}

const ConfigRegistry::Entry& ConfigRegistry::find(const std::string& key) const {
  for (const Entry& e : entries_)
    if (e.key == key) return e;
  throw ParseError("unknown config key '" + key + "'");
}

void ConfigRegistry::set(const std::string& key, const std::string& value) {
  const Entry& e = find(key);
  try {
    e.set(trim(value));
  } catch (const ParseError& err) {
    throw ParseError(key + ": " + std::string(err.what()).substr(std::string("ParseError: ").size()));
  }
}

std::string ConfigRegistry::get(const std::string& key) const { return find(key).get(); }

bool ConfigRegistry::contains(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == key; });
}

std::vector<std::string> ConfigRegistry::keys() const {
  std::vector<std::string> out;
  for (const Entry& e : entries_) out.push_back(e.key);
  return out;
}

std::string ConfigRegistry::dump() const {
  std::string out;
  for (const Entry& e : entries_) out += e.key + " = " + e.get() + "\n";
  return out;
}

void apply_config_text(ConfigRegistry& registry, const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  for (int n = 1; std::getline(in, line); ++n) {
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError(origin + ":" + std::to_string(n) + ": expected 'key = value'");
    try {
      registry.set(trim(t.substr(0, eq)), t.substr(eq + 1));
    } catch (const ParseError& err) {
      throw ParseError(origin + ":" + std::to_string(n) + ": " +
                       std::string(err.what()).substr(std::string("ParseError: ").size()));
    }
  }
}

void load_config_file(ConfigRegistry& registry, const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot read config file " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  apply_config_text(registry, ss.str(), file.string());
}

}  // namespace fcslam
