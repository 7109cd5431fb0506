#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "aeos/odometry/metrics.hpp"
#include "aeos/rl/trainer.hpp"

namespace aeos {

struct BenchmarkConfig {
  std::vector<std::string> scenes{"tunnel"};
  std::vector<std::string> controllers{"fixed-slow", "fixed-fast", "random", "mpc", "aeos-nounc", "aeos"};
  int seeds = 3;
  std::uint64_t first_seed = 1;
  double episode_seconds = 60.0;
  double start_fraction = 0.0;  // episode start as a fraction of the trajectory
  std::string checkpoint;       // learned-cost controllers; empty: untrained network
  int threads = 0;              // 0: one per hardware thread
};

/// Every tunable value of the system, grouped by section.
struct AppConfig {
  SceneParams scene;
  std::uint64_t scene_seed = 1;
  EnvConfig env;
  CostNetConfig net;
  PolicyConfig policy;
  CriticConfig critic;
  TrainConfig train;
  BenchmarkConfig benchmark;
  ApeOptions ape;

  /// Copies the values shared between modules from their single source
  /// (rate limit, tick, horizon, pano size) and validates every section.
  /// Throws ConfigError.
  void finalize();
};

/// Parses TOML-style text: `[section]` headers, `key = value` lines, `#`
/// comments; values are numbers, true/false, "strings" or ["string", ...]
/// lists. Unknown sections or keys and malformed values throw ConfigError
/// naming the line. Keys not present keep their defaults.
AppConfig parse_config(const std::string& text);
AppConfig load_config(const std::filesystem::path& path);

/// The full default configuration in the same format.
std::string default_config_text();

}  // namespace aeos
