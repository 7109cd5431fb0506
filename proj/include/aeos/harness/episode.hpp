#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aeos/harness/controllers.hpp"

namespace aeos {

/// `tunnel`, `room`, `forest` (synthetic, from the [scene] section), or
/// `<map.ply>+<trajectory.tum>`. Throws ConfigError for an unknown name and
/// IoError for unreadable files.
std::shared_ptr<const Scene> resolve_scene(const std::string& spec, const AppConfig& config);

struct EpisodeStepLog {
  double time = 0.0;
  double theta = 0.0;        // rotor angle after the tick
  double omega_cmd = 0.0;
  double omega = 0.0;        // rate applied on the tick
  RewardTerms reward;
  double rte = 0.0;
  Pose estimate;
  Pose truth;
  std::uint64_t uncertainty_hash = 0;  // of the samples the controller saw
  std::optional<double> mpc_residual;
  bool mpc_converged = true;
  UpdateStatus status = UpdateStatus::kRegistered;
  double latency_ms = 0.0;   // controller decision time; not deterministic
};

struct EpisodeLog {
  std::string scene;
  std::string controller;
  std::uint64_t seed = 0;
  std::vector<EpisodeStepLog> steps;
  Trajectory estimate;
  Trajectory truth;
  double ape = 0.0;
  double mean_exploration = 0.0;
  int degenerate_steps = 0;
  bool failed = false;
  std::string failure;
};

struct EpisodeOptions {
  double start = 0.0;     // s from the trajectory start
  double duration = 60.0;
  std::optional<int> max_steps;
  double theta0 = 0.0;
};

/// Closed loop for one controller. Marks the log failed (and keeps the
/// partial log) when more than half of the registrations were degenerate.
EpisodeLog run_episode(std::shared_ptr<const Scene> scene, const std::string& scene_name,
                       const ControllerSpec& spec, Controller& controller, std::uint64_t seed,
                       const AppConfig& config, const EpisodeOptions& options);

/// FNV-1a over the bytes of the sample values.
std::uint64_t hash_samples(const UncertaintySamples& samples);

/// Per-step CSV (deterministic columns only) plus estimate and truth TUM
/// files next to it: <stem>.csv, <stem>_estimate.tum, <stem>_truth.tum.
void write_episode(const std::filesystem::path& stem, const EpisodeLog& log);

/// Reads a per-step CSV back (estimate/truth poses carry position only).
EpisodeLog read_episode_csv(const std::filesystem::path& path);

}  // namespace aeos
