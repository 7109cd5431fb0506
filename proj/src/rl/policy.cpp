#include "aeos/rl/policy.hpp"

#include <cmath>
#include <numbers>

#include "aeos/common/error.hpp"

namespace aeos {

MpcPolicy::MpcPolicy(const CostNet* net, const PolicyConfig& config) : net_(net), config_(config) {
  config_.mpc.validate();
  if (config_.use_learned) {
    if (net_ == nullptr) throw ConfigError("policy: learned cost requested without a network");
    if (net_->config().horizon != config_.mpc.horizon) {
      throw ConfigError("policy: network horizon differs from the MPC horizon");
    }
  }
}

MpcProblem MpcPolicy::problem(const EnvObservation& obs, std::vector<QuadCostParams> costs) const {
  MpcProblem p;
  p.config = config_.mpc;
  p.theta_t = obs.theta;
  p.surrogate = config_.use_uncertainty ? &obs.uncertainty : nullptr;
  p.costs = std::move(costs);
  return p;
}

PolicyDecision MpcPolicy::decide(const EnvObservation& obs) const {
  return decide(net_ != nullptr ? std::span<const double>(net_->params()) : std::span<const double>(),
                obs);
}

PolicyDecision MpcPolicy::decide(std::span<const double> params, const EnvObservation& obs) const {
  PolicyDecision d;
  if (config_.use_learned) d.costs = net_->forward(params, obs.policy, &d.cache);
  d.solution = solve_mpc(problem(obs, d.costs));
  d.omega = d.solution.omega[0];
  return d;
}

bool MpcPolicy::backward(std::span<const double> params, const EnvObservation& obs,
                         const PolicyDecision& decision, double upstream,
                         std::span<double> grad) const {
  if (!config_.use_learned) return false;
  const MpcProblem p = problem(obs, decision.costs);
  const auto g = mpc_param_gradient(p, decision.solution, upstream);
  if (g.d_costs.empty()) return false;
  if (std::abs(decision.solution.omega[0]) >= config_.mpc.omega_max) return false;
  if (upstream != 0.0) net_->backward(params, decision.cache, g.d_costs, grad);
  return true;
}

Critic::Critic(int feature_size, double omega_scale, const CriticConfig& config)
    : mlp_({feature_size + 1, config.hidden, config.hidden, 1}), omega_scale_(omega_scale) {
  if (feature_size < 1 || config.hidden < 1) throw ConfigError("critic: sizes must be positive");
  if (!(omega_scale > 0.0)) throw ConfigError("critic: omega scale must be > 0");
  params_.assign(mlp_.param_count(), 0.0);
  Rng rng(config.seed);
  mlp_.init(params_, rng);
  // Start from a zero value estimate.
  const std::size_t last = mlp_.layer_count() - 1;
  for (std::size_t i = mlp_.weight_offset(last); i < mlp_.param_count(); ++i) params_[i] = 0.0;
}

double Critic::value(std::span<const double> params, std::span<const double> features,
                     double omega, Mlp::Cache* cache) const {
  if (static_cast<int>(features.size()) + 1 != mlp_.input_size()) {
    throw InputError("critic: feature size mismatch");
  }
  std::vector<double> x(features.begin(), features.end());
  x.push_back(omega / omega_scale_);
  Mlp::Cache local;
  Mlp::Cache& c = cache != nullptr ? *cache : local;
  mlp_.forward(params, x, c);
  return mlp_.output(c)[0];
}

double Critic::d_omega(std::span<const double> params, const Mlp::Cache& cache) const {
  // Backpropagate a unit output gradient to the last input only.
  const auto& sizes = mlp_.sizes();
  std::vector<double> d_out{1.0};
  for (std::size_t l = mlp_.layer_count(); l-- > 1;) {
    const int in = sizes[l], out = sizes[l + 1];
    const double* w = params.data() + mlp_.weight_offset(l);
    std::vector<double> d_in(static_cast<std::size_t>(in), 0.0);
    for (int r = 0; r < out; ++r) {
      const double g = d_out[static_cast<std::size_t>(r)];
      if (g == 0.0) continue;
      const double* row = w + static_cast<std::size_t>(r) * static_cast<std::size_t>(in);
      for (int c = 0; c < in; ++c) d_in[static_cast<std::size_t>(c)] += g * row[c];
    }
    // Through the ReLU of the layer feeding this one.
    const auto& act = cache.outputs[l - 1];
    for (int c = 0; c < in; ++c) {
      if (act[static_cast<std::size_t>(c)] <= 0.0) d_in[static_cast<std::size_t>(c)] = 0.0;
    }
    d_out = std::move(d_in);
  }
  const int in0 = sizes[0];
  const double* w0 = params.data() + mlp_.weight_offset(0);
  double d = 0.0;
  for (int r = 0; r < sizes[1]; ++r) {
    d += d_out[static_cast<std::size_t>(r)] *
         w0[static_cast<std::size_t>(r) * static_cast<std::size_t>(in0) + static_cast<std::size_t>(in0 - 1)];
  }
  return d / omega_scale_;
}

void Critic::backward(std::span<const double> params, const Mlp::Cache& cache, double dq,
                      std::span<double> grad) const {
  const double dy[1] = {dq};
  mlp_.backward(params, cache, dy, grad);
}

double gaussian_log_prob(double action, double mean, double sigma) {
  if (!(sigma > 0.0)) throw InputError("log prob: sigma must be > 0");
  const double z = (action - mean) / sigma;
  return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace aeos
