#include "aeos/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "aeos/common/error.hpp"

namespace aeos {

Adam::Adam(std::size_t size, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw InputError("adam: size mismatch");
  }
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
    params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
}

double clip_grad_norm(std::span<double> grad, double max_norm) {
  double sq = 0.0;
  for (double g : grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (double& g : grad) g *= s;
  }
  return norm;
}

std::vector<double> compute_gae(std::span<const double> rewards, std::span<const double> values,
                                std::span<const char> episode_end,
                                std::span<const double> bootstrap, double gamma, double lambda) {
  const std::size_t n = rewards.size();
  if (values.size() != n || episode_end.size() != n || bootstrap.size() != n) {
    throw InputError("gae: length mismatch");
  }
  if (n > 0 && !episode_end[n - 1]) throw InputError("gae: batch must end on an episode boundary");
  std::vector<double> adv(n, 0.0);
  double carry = 0.0;
  for (std::size_t t = n; t-- > 0;) {
    const bool end = episode_end[t] != 0;
    const double next_value = end ? bootstrap[t] : values[t + 1];
    const double delta = rewards[t] + gamma * next_value - values[t];
    carry = delta + gamma * lambda * (end ? 0.0 : carry);
    adv[t] = carry;
  }
  return adv;
}

void PpoConfig::validate() const {
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("ppo: gamma must be in (0, 1]");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0)) throw ConfigError("ppo: lambda must be in [0, 1]");
  if (!(clip > 0.0)) throw ConfigError("ppo: clip must be > 0");
  if (!(grad_clip > 0.0)) throw ConfigError("ppo: gradient clip must be > 0");
  if (!(kl_stop > 0.0)) throw ConfigError("ppo: KL threshold must be > 0");
  if (epochs < 1 || minibatch < 1) throw ConfigError("ppo: epochs and minibatch must be >= 1");
  if (!(critic_lr_scale > 0.0)) throw ConfigError("ppo: critic lr scale must be > 0");
}

namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

bool any_nonzero(std::span<const double> v) {
  return std::any_of(v.begin(), v.end(), [](double x) { return x != 0.0; });
}

}  // namespace

PpoStats ppo_update(const MpcPolicy& policy, Learner& learner, const std::vector<Transition>& batch,
                    double sigma, double lr, const PpoConfig& config, Rng& rng) {
  config.validate();
  std::vector<double> rewards, values, bootstrap;
  std::vector<char> ends;
  for (const auto& t : batch) {
    rewards.push_back(t.reward);
    values.push_back(t.value);
    bootstrap.push_back(t.bootstrap);
    ends.push_back(t.episode_end ? 1 : 0);
  }
  const auto adv = compute_gae(rewards, values, ends, bootstrap, config.gamma, config.gae_lambda);
  std::vector<double> returns(adv.size());
  for (std::size_t i = 0; i < adv.size(); ++i) returns[i] = adv[i] + values[i];
  return ppo_update_with_advantages(policy, learner, batch, adv, returns, sigma, lr, config, rng);
}

PpoStats ppo_update_with_advantages(const MpcPolicy& policy, Learner& learner,
                                    const std::vector<Transition>& batch,
                                    std::span<const double> advantages,
                                    std::span<const double> returns, double sigma, double lr,
                                    const PpoConfig& config, Rng& rng) {
  config.validate();
  const std::size_t n = batch.size();
  if (n == 0) throw InputError("ppo: empty batch");
  if (advantages.size() != n || returns.size() != n) throw InputError("ppo: length mismatch");
  if (!(sigma > 0.0)) throw InputError("ppo: sigma must be > 0");

  std::vector<double> adv(advantages.begin(), advantages.end());
  if (config.normalize_advantages && n > 1) {
    const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (double a : adv) var += (a - mean) * (a - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    for (double& a : adv) a = (a - mean) / (sd + 1e-8);
  }

  CostNet& net = learner.net;
  Critic& critic = learner.critic;
  std::vector<double> grad_a(net.param_count()), grad_c(critic.param_count());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double inv_var = 1.0 / (sigma * sigma);

  PpoStats stats;
  bool actor_active = true;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the trainer's stream keeps shuffles reproducible.
    for (std::size_t i = n; i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
      std::swap(order[i - 1], order[std::min(j, i - 1)]);
    }
    double kl_sum = 0.0, policy_loss = 0.0, value_loss = 0.0;
    std::size_t clipped = 0, clamped = 0, kl_count = 0, policy_count = 0;
    bool actor_stepped = false;
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(config.minibatch)) {
      const std::size_t stop = std::min(n, start + static_cast<std::size_t>(config.minibatch));
      const double scale = 1.0 / static_cast<double>(stop - start);
      std::fill(grad_a.begin(), grad_a.end(), 0.0);
      std::fill(grad_c.begin(), grad_c.end(), 0.0);
      double mb_policy = 0.0, mb_value = 0.0, mb_kl = 0.0;
      for (std::size_t s = start; s < stop; ++s) {
        const std::size_t i = order[s];
        const Transition& tr = batch[i];
        Mlp::Cache vc;
        const double q = critic.value(tr.features, tr.action, &vc);
        const double err = q - returns[i];
        mb_value += 0.5 * err * err;
        critic.backward(critic.params(), vc, err * scale, grad_c);
        if (!actor_active) continue;

        const PolicyDecision dec = policy.decide(net.params(), tr.obs);
        const double mu = dec.omega;
        mb_kl += 0.5 * (mu - tr.mean) * (mu - tr.mean) * inv_var;

        double upstream = 0.0;
        if (config.objective == ActorObjective::kClippedSurrogate) {
          const double ratio = std::exp(gaussian_log_prob(tr.action, mu, sigma) - tr.log_prob);
          const double a = adv[i];
          const double unclipped = ratio * a;
          const double bounded = std::clamp(ratio, 1.0 - config.clip, 1.0 + config.clip) * a;
          mb_policy += -std::min(unclipped, bounded);
          if (unclipped <= bounded) {
            // d(-ratio·A)/dμ with d ratio/dμ = ratio·(a - μ)/σ².
            upstream = -a * ratio * (tr.action - mu) * inv_var * scale;
          } else {
            ++clipped;
          }
        } else {
          Mlp::Cache qc;
          mb_policy += -critic.value(tr.features, mu, &qc);
          upstream = -critic.d_omega(critic.params(), qc) * scale;
        }
        if (upstream != 0.0 && !policy.backward(net.params(), tr.obs, dec, upstream, grad_a)) ++clamped;
      }
      if (!std::isfinite(mb_policy) || !std::isfinite(mb_value) || !all_finite(grad_a) ||
          !all_finite(grad_c)) {
        stats.rejected = true;
        continue;
      }
      value_loss += mb_value;
      stats.critic_grad_norm = clip_grad_norm(grad_c, config.grad_clip);
      learner.critic_opt.step(critic.params(), grad_c, lr * config.critic_lr_scale);
      if (!actor_active) continue;

      kl_sum += mb_kl;
      kl_count += stop - start;
      // The minibatch KL is measured before its step, so a policy that has
      // already drifted too far takes no further actor steps this update.
      if (mb_kl * scale > config.kl_stop) {
        actor_active = false;
        continue;
      }
      stats.actor_grad_norm = clip_grad_norm(grad_a, config.grad_clip);
      policy_loss += mb_policy;
      policy_count += stop - start;
      actor_stepped = true;
      // A zero actor gradient leaves the network untouched (no momentum drift).
      if (any_nonzero(grad_a)) learner.actor_opt.step(net.params(), grad_a, lr);
    }
    stats.value_loss = value_loss / static_cast<double>(n);
    if (kl_count > 0) stats.approx_kl = kl_sum / static_cast<double>(kl_count);
    if (actor_stepped) ++stats.epochs;
    if (policy_count > 0) {
      stats.policy_loss = policy_loss / static_cast<double>(policy_count);
      stats.clip_fraction = static_cast<double>(clipped) / static_cast<double>(kl_count);
      stats.clamped_fraction = static_cast<double>(clamped) / static_cast<double>(kl_count);
    }
  }
  return stats;
}

std::vector<double> critic_actor_gradient(const MpcPolicy& policy, const Critic& critic,
                                          std::span<const double> params,
                                          const std::vector<EnvObservation>& observations) {
  std::vector<double> grad(params.size(), 0.0);
  if (observations.empty()) return grad;
  const double scale = 1.0 / static_cast<double>(observations.size());
  for (const auto& obs : observations) {
    const PolicyDecision dec = policy.decide(params, obs);
    Mlp::Cache qc;
    (void)critic.value(obs.policy.features(), dec.omega, &qc);
    const double dq = critic.d_omega(critic.params(), qc);
    policy.backward(params, obs, dec, dq * scale, grad);
  }
  return grad;
}

double mean_critic_value(const MpcPolicy& policy, const Critic& critic, std::span<const double> params,
                         const std::vector<EnvObservation>& observations) {
  if (observations.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& obs : observations) {
    sum += critic.value(obs.policy.features(), policy.decide(params, obs).omega);
  }
  return sum / static_cast<double>(observations.size());
}

}  // namespace aeos
