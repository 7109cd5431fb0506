#pragma once

#include <span>
#include <vector>

#include "aeos/rl/policy.hpp"

namespace aeos {

/// Adam moments for one flat parameter vector.
class Adam {
 public:
  explicit Adam(std::size_t size = 0, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::span<double> params, std::span<const double> grad, double lr);

  std::size_t size() const { return m_.size(); }
  std::uint64_t steps() const { return t_; }
  std::vector<double>& first_moment() { return m_; }
  std::vector<double>& second_moment() { return v_; }
  const std::vector<double>& first_moment() const { return m_; }
  const std::vector<double>& second_moment() const { return v_; }
  void set_steps(std::uint64_t t) { t_ = t; }

 private:
  double beta1_, beta2_, eps_;
  std::uint64_t t_ = 0;
  std::vector<double> m_, v_;
};

/// Scales `grad` so its Euclidean norm is at most `max_norm`. Returns the
/// norm before scaling.
double clip_grad_norm(std::span<double> grad, double max_norm);

/// Generalized advantage estimates. `episode_end[t]` marks the last step of
/// an episode in the batch; `bootstrap[t]` is then the value of the state
/// that follows (0 for a true terminal). Returns advantages; returns are
/// advantages + values.
std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                std::span<const char> episode_end,
                                std::span<const double> bootstrap, double gamma, double lambda);

/// One stored step of the stochastic policy.
struct Transition {
  EnvObservation obs;
  std::vector<double> features;  // network input features of obs.policy
  double action = 0.0;           // perturbed rate sent to the scanner
  double mean = 0.0;             // deterministic MPC rate at collection time
  double log_prob = 0.0;
  double reward = 0.0;           // scaled reward
  double value = 0.0;            // Q(o, mean) at collection time
  bool episode_end = false;
  double bootstrap = 0.0;        // value after the last step of an episode
};

enum class ActorObjective {
  kClippedSurrogate,  // PPO on the Gaussian rate perturbation
  kCriticAscent,      // follow dQ/dω at the MPC output directly
};

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip = 0.2;
  double grad_clip = 0.5;
  double kl_stop = 0.01;
  int epochs = 4;
  int minibatch = 64;
  bool normalize_advantages = true;
  double critic_lr_scale = 1.0;
  ActorObjective objective = ActorObjective::kClippedSurrogate;

  void validate() const;
};

struct PpoStats {
  int epochs = 0;              // epochs with at least one actor step
  double approx_kl = 0.0;      // mean over the minibatches measured in the last epoch
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double actor_grad_norm = 0.0;   // before clipping, last minibatch
  double critic_grad_norm = 0.0;
  double clip_fraction = 0.0;
  double clamped_fraction = 0.0;  // samples whose first MPC rate sat on a bound
  bool rejected = false;          // a non-finite loss or gradient was seen
};

/// Mutable learning state for one network pair.
struct Learner {
  CostNet& net;
  Critic& critic;
  Adam& actor_opt;
  Adam& critic_opt;
};

/// Clipped-surrogate PPO epochs over `batch`. Actor gradients pass through
/// the MPC layer to the network; the critic regresses Q(o, a) onto the GAE
/// returns. KL to the rollout policy is measured on each minibatch before
/// its step; once it exceeds kl_stop, actor steps stop for the rest of the
/// update. Critic regression runs for all epochs.
PpoStats ppo_update(const MpcPolicy& policy, Learner& learner, const std::vector<Transition>& batch,
                    double sigma, double lr, const PpoConfig& config, Rng& rng);

/// Same, with advantages and returns supplied (advantages are normalized
/// here when configured).
PpoStats ppo_update_with_advantages(const MpcPolicy& policy, Learner& learner,
                                    const std::vector<Transition>& batch,
                                    std::span<const double> advantages,
                                    std::span<const double> returns, double sigma, double lr,
                                    const PpoConfig& config, Rng& rng);

/// ∇φ of the mean over `observations` of Q(o, ω*(φ)), through the MPC
/// layer. Samples with a clamped first rate contribute nothing.
std::vector<double> critic_actor_gradient(const MpcPolicy& policy, const Critic& critic,
                                          std::span<const double> params,
                                          const std::vector<EnvObservation>& observations);

/// Mean of Q(o, ω*(φ)) over the observations.
double mean_critic_value(const MpcPolicy& policy, const Critic& critic, std::span<const double> params,
                         const std::vector<EnvObservation>& observations);

}  // namespace aeos
