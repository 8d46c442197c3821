#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "fcslam/experiments.hpp"
#include "fcslam/ground_station.hpp"
#include "fcslam/mission.hpp"

namespace fcslam {

/// Every tunable of the tool in one place.
struct AppConfig {
  std::uint64_t seed = 1;
  int seeds = 10;  // runs for mission-level experiments
  ScenarioConfig scenario;
  MissionConfig mission;
  PipelineConfig pipeline;
  DetectEvalConfig detect_eval;
  GlarotEvalConfig glarot_eval;
  SyntheticAssocConfig assoc_eval;
  int assoc_trials = 200;
  std::vector<double> sweep_epsilons{0.05, 0.1, 0.15, 0.2, 0.3};

  AppConfig();
};

/// Named starting points: "default", "planner", "slam" and "fusion".
AppConfig preset(const std::string& name);
std::vector<std::string> preset_names();

/// Copies the detector, sensor geometry and descriptor settings of the
/// mission and pipeline into the evaluation configs that reuse them.
void sync_shared(AppConfig& cfg);

/// Dotted `section.name` keys bound to the fields of one AppConfig. Values
/// are parsed strictly; unknown keys and malformed values throw ParseError.
class ConfigRegistry {
 public:
  explicit ConfigRegistry(AppConfig& cfg);
  ConfigRegistry(const ConfigRegistry&) = delete;
  ConfigRegistry& operator=(const ConfigRegistry&) = delete;

  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;
  bool contains(const std::string& key) const;
  std::vector<std::string> keys() const;
  /// `key = value` per line in registration order; loading it back gives the
  /// same configuration.
  std::string dump() const;

 private:
  struct Entry {
    std::string key;
    std::function<void(const std::string&)> set;
    std::function<std::string()> get;
  };
  const Entry& find(const std::string& key) const;
  template <typename T>
  void bind(const std::string& key, T& field);
  void bind_custom(const std::string& key, std::function<void(const std::string&)> set,
                   std::function<std::string()> get);

  std::vector<Entry> entries_;
};

/// Applies `key = value` lines. Blank lines and lines starting with '#' are
/// skipped. `origin` prefixes error messages.
void apply_config_text(ConfigRegistry& registry, const std::string& text, const std::string& origin = "config");
void load_config_file(ConfigRegistry& registry, const std::filesystem::path& file);

}  // namespace fcslam
