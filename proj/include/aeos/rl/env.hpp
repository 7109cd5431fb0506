#pragma once

#include <memory>

#include "aeos/common/rng.hpp"
#include "aeos/costnet/costnet.hpp"
#include "aeos/geometry/frame_chain.hpp"
#include "aeos/mpc/mpc.hpp"
#include "aeos/odometry/registration.hpp"
#include "aeos/rl/reward.hpp"
#include "aeos/scansim/coverage.hpp"
#include "aeos/scansim/scanner.hpp"
#include "aeos/scansim/scenes.hpp"
#include "aeos/uncertainty/surrogate.hpp"

namespace aeos {

struct EnvConfig {
  double dt = 0.1;  // s, control and scan period
  SensorModel sensor;
  ScannerLimits scanner;
  FrameChain mount;  // extrinsics; the angle is driven by the scanner
  OdometryConfig odometry;
  UncertaintyConfig uncertainty;
  int policy_pano_width = 80;
  int policy_pano_height = 40;
  double coverage_voxel = 0.5;  // m
  double rte_window = 2.0;      // s
  RewardWeights reward;
  // Per-step noise on the motion prior handed to odometry, as standard
  // deviations: rotation (rad) then translation (m).
  double prior_rotation_sigma = 0.005;
  double prior_translation_sigma = 0.02;

  /// Throws ConfigError on inconsistent values.
  void validate() const;
};

/// What a controller sees before choosing a rate.
struct EnvObservation {
  double time = 0.0;
  double theta = 0.0;  // rotor angle, [0, 2π)
  Pose estimate;       // body pose from odometry
  PolicyObservation policy;
  UncertaintySamples uncertainty;
};

struct EnvStep {
  RewardTerms reward;
  double rte = 0.0;
  double applied_omega = 0.0;  // rate the rotor actually turned at this tick
  UpdateStatus status = UpdateStatus::kRegistered;
  bool done = false;
};

/// Closed loop over one scene: trajectory playback, rotor, raycast scan,
/// odometry, coverage and reward. Single-threaded; the scene is shared
/// read-only.
class ScanEnv {
 public:
  ScanEnv(std::shared_ptr<const Scene> scene, const EnvConfig& config);

  /// Starts an episode on [start, start + duration] (clipped to the
  /// trajectory) with the rotor at `theta0`. The first scan seeds the map.
  const EnvObservation& reset(double start, double duration, std::uint64_t seed,
                              double theta0 = 0.0);

  /// Advances one tick with the commanded rate. Throws InputError after the
  /// episode is done.
  EnvStep step(double omega_cmd);

  const EnvObservation& observation() const { return obs_; }
  const EnvConfig& config() const { return config_; }
  const Scene& scene() const { return *scene_; }
  const ScannerState& scanner() const { return scanner_; }
  const Trajectory& estimate_trajectory() const { return estimate_; }
  const Trajectory& truth_trajectory() const { return truth_; }
  const Odometry& odometry() const { return *odometry_; }
  int steps() const { return steps_; }
  int degenerate_steps() const { return degenerate_; }
  bool done() const { return done_; }
  /// Ticks in an episode of `duration` seconds starting at `start`.
  int episode_ticks(double start, double duration) const;

 private:
  void observe();
  Pose lidar_in_world(const Pose& body, double theta) const;

  std::shared_ptr<const Scene> scene_;
  EnvConfig config_;
  Rng rng_;
  ScannerState scanner_;
  std::unique_ptr<Odometry> odometry_;
  VoxelCoverage coverage_;
  Trajectory estimate_;
  Trajectory truth_;
  EnvObservation obs_;
  Pose last_truth_;
  Pose last_estimate_;
  double start_ = 0.0;
  double end_ = 0.0;
  int steps_ = 0;
  int max_steps_ = 0;
  int degenerate_ = 0;
  bool done_ = true;
};

}  // namespace aeos
