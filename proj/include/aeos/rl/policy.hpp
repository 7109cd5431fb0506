#pragma once

#include <optional>
#include <span>
#include <vector>

#include "aeos/common/rng.hpp"
#include "aeos/costnet/costnet.hpp"
#include "aeos/costnet/mlp.hpp"
#include "aeos/mpc/mpc.hpp"
#include "aeos/rl/env.hpp"

namespace aeos {

struct PolicyConfig {
  MpcConfig mpc;
  bool use_uncertainty = true;  // include the surrogate term
  bool use_learned = true;      // include the network's quadratic cost
};

/// MPC solve for one observation, with everything needed to differentiate it.
struct PolicyDecision {
  double omega = 0.0;  // first planned rate, the deterministic action
  MpcSolution solution;
  std::vector<QuadCostParams> costs;
  CostNet::Cache cache;
};

/// Deterministic scan-rate policy: (optional) network costs plus (optional)
/// uncertainty surrogate, minimized by the MPC layer.
class MpcPolicy {
 public:
  /// `net` may be null when use_learned is false; it must outlive the policy.
  MpcPolicy(const CostNet* net, const PolicyConfig& config);

  const PolicyConfig& config() const { return config_; }
  const CostNet* net() const { return net_; }

  MpcProblem problem(const EnvObservation& obs, std::vector<QuadCostParams> costs) const;
  PolicyDecision decide(const EnvObservation& obs) const;
  PolicyDecision decide(std::span<const double> params, const EnvObservation& obs) const;

  /// Accumulates upstream · dω*_0/dφ into `grad`. Returns false when the
  /// first rate is clamped (no gradient).
  bool backward(std::span<const double> params, const EnvObservation& obs,
                const PolicyDecision& decision, double upstream, std::span<double> grad) const;

 private:
  const CostNet* net_;
  PolicyConfig config_;
};

struct CriticConfig {
  int hidden = 256;
  std::uint64_t seed = 2;
};

/// Q(o, ω): policy features plus the normalized rate, two hidden layers,
/// scalar output.
class Critic {
 public:
  Critic(int feature_size, double omega_scale, const CriticConfig& config);

  const Mlp& mlp() const { return mlp_; }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  std::size_t param_count() const { return mlp_.param_count(); }

  double value(std::span<const double> params, std::span<const double> features, double omega,
               Mlp::Cache* cache = nullptr) const;
  double value(std::span<const double> features, double omega, Mlp::Cache* cache = nullptr) const {
    return value(params_, features, omega, cache);
  }
  /// dQ/dω at the cached input.
  double d_omega(std::span<const double> params, const Mlp::Cache& cache) const;
  /// Accumulates dq · dQ/dparams into `grad`.
  void backward(std::span<const double> params, const Mlp::Cache& cache, double dq,
                std::span<double> grad) const;

 private:
  Mlp mlp_;
  double omega_scale_;
  std::vector<double> params_;
};

/// Log-density of a Gaussian rate perturbation.
double gaussian_log_prob(double action, double mean, double sigma);

}  // namespace aeos
