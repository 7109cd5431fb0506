#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <vector>

#include "aeos/rl/ppo.hpp"

namespace aeos {

struct TrainConfig {
  long total_steps = 500000;
  double episode_seconds = 60.0;
  double train_split = 0.4;   // episodes start inside this leading fraction
  int rollout_steps = 600;    // minimum steps collected per update (whole episodes)
  double sigma_start = 0.5;   // rad/s, exploration noise, annealed linearly
  double sigma_end = 0.05;
  double learning_rate = 3e-4;  // decays linearly to zero over total_steps
  double reward_scale = 0.01;
  long checkpoint_every = 5000;
  bool evaluate = true;         // held-out APE at every checkpoint
  double eval_seconds = 60.0;
  PpoConfig ppo;

  void validate() const;
};

struct CurvePoint {
  long step = 0;
  int episodes = 0;
  double mean_return = 0.0;
  std::optional<double> heldout_ape;
  double sigma = 0.0;
  double lr = 0.0;
};

/// Everything a training run needs besides the scenes.
struct TrainSetup {
  EnvConfig env;
  CostNetConfig net;
  PolicyConfig policy;
  CriticConfig critic;
  TrainConfig train;
};

/// PPO training of the cost network through the MPC layer. Writes
/// checkpoints, a learning-curve CSV and a newline-delimited JSON scalar log
/// under the output directory.
class Trainer {
 public:
  Trainer(std::vector<std::shared_ptr<const Scene>> scenes, const TrainSetup& setup,
          std::uint64_t seed, std::filesystem::path out_dir);

  /// Trains until total_steps. Writes an initial checkpoint when starting
  /// from step 0 and a final one at the end.
  void run();

  void save(const std::filesystem::path& stem);
  /// Restores networks, optimizer moments, counters and the random stream.
  void resume(const std::filesystem::path& stem);

  long step() const { return step_; }
  const std::vector<double>& episode_returns() const { return episode_returns_; }
  const std::vector<CurvePoint>& curve() const { return curve_; }
  const CostNet& net() const { return net_; }
  const Critic& critic() const { return critic_; }
  const Rng& rng() const { return rng_; }
  const std::filesystem::path& out_dir() const { return out_dir_; }

  double sigma_at(long step) const;
  double lr_at(long step) const;
  /// APE of the deterministic policy on the held-out part of the first scene.
  double evaluate_heldout();

 private:
  std::vector<Transition> collect(long budget);
  void log_scalar(const char* tag, double value);
  void write_curve_row(const CurvePoint& p);
  std::filesystem::path checkpoint_stem(long step) const;

  std::vector<std::shared_ptr<const Scene>> scenes_;
  TrainSetup setup_;
  std::uint64_t seed_;
  std::filesystem::path out_dir_;
  CostNet net_;
  Critic critic_;
  MpcPolicy policy_;
  Adam actor_opt_, critic_opt_;
  Rng rng_;
  long step_ = 0;
  int episodes_ = 0;
  std::vector<double> episode_returns_;
  std::vector<CurvePoint> curve_;
  std::ofstream curve_file_, scalar_file_;
};

/// Metadata of a checkpoint describing the network it holds, and the
/// network parameters. Throws IoError or ConfigError on malformed input.
struct LoadedPolicy {
  CostNetConfig net;
  std::vector<double> params;
};
LoadedPolicy load_policy_checkpoint(const std::filesystem::path& stem);

}  // namespace aeos
