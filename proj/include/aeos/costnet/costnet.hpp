#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "aeos/costnet/mlp.hpp"
#include "aeos/geometry/pano.hpp"

namespace aeos {

/// Per-step quadratic cost over (θ, ω):
/// ½(q_theta·e² + q_omega·ω²) + l_theta·e + l_omega·ω, with
/// e = wrap(θ - theta_ref) in centred mode and e = θ in raw mode.
struct QuadCostParams {
  double q_theta = 0.0;
  double q_omega = 0.0;
  double l_theta = 0.0;
  double l_omega = 0.0;
  double theta_ref = 0.0;
};

/// Gradient of some scalar with respect to each QuadCostParams field.
using QuadCostGrad = QuadCostParams;

struct CostBounds {
  double q_min = 0.1;
  double q_max = 1e5;
  double linear_bound = 10.0;
  bool centered = true;
};

struct CostValue {
  double cost = 0.0;
  double d_theta = 0.0;
  double d_omega = 0.0;
};

CostValue eval_cost(const QuadCostParams& p, double theta, double omega, bool centered = true);

/// Squashes the five raw head outputs into bounded cost parameters.
QuadCostParams bound_head(std::span<const double, 5> z, const CostBounds& bounds);
/// Chain rule through bound_head: dL/dz from dL/dparams.
void bound_head_backward(std::span<const double, 5> z, const QuadCostGrad& upstream,
                         const CostBounds& bounds, std::span<double, 5> dz);

/// Network input: body velocity, positional covariance diagonal, rotor angle
/// as (sin, cos), and the normalized policy pano (row-major, no-return -> 1).
struct PolicyObservation {
  Eigen::Vector3d velocity = Eigen::Vector3d::Zero();
  Eigen::Vector3d covariance_diag = Eigen::Vector3d::Zero();
  double rotor_angle = 0.0;
  std::vector<double> pano;

  static constexpr int kScalarFeatures = 8;
  static PolicyObservation from_pano(const Eigen::Vector3d& velocity,
                                     const Eigen::Vector3d& covariance_diag, double rotor_angle,
                                     const PanoDepthMap& pano);
  /// Feature vector; throws InputError on non-finite entries.
  std::vector<double> features() const;
};

struct CostNetConfig {
  int pano_width = 80;
  int pano_height = 40;
  int horizon = 10;  // T; the network emits T + 1 parameter sets
  int hidden = 256;
  bool per_step = true;  // append k/T to the input; otherwise all steps share one output
  CostBounds bounds;
  double q_bias_init = -12.0;  // start near q_min so the initial cost is gentle
  std::uint64_t seed = 1;

  int input_size() const {
    return PolicyObservation::kScalarFeatures + pano_width * pano_height + (per_step ? 1 : 0);
  }
};

/// Shared network mapping (observation, step index) to QuadCostParams for every
/// horizon step. The first layer's response to the observation is computed
/// once and reused across steps.
class CostNet {
 public:
  static constexpr int kHeadSize = 5;

  explicit CostNet(const CostNetConfig& config);

  const CostNetConfig& config() const { return config_; }
  const Mlp& mlp() const { return mlp_; }
  std::size_t param_count() const { return mlp_.param_count(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }
  int steps() const { return config_.horizon + 1; }

  struct Cache {
    std::vector<double> base_input;             // features, step slot zero
    std::vector<std::vector<double>> hidden;    // per step: concatenated layer outputs
    std::vector<std::array<double, 5>> head;    // raw head outputs per step
  };

  std::vector<QuadCostParams> forward(const PolicyObservation& obs, Cache* cache = nullptr) const;
  std::vector<QuadCostParams> forward(std::span<const double> params, const PolicyObservation& obs,
                                      Cache* cache) const;

  /// Accumulates into `grad` the gradient of Σ_k upstream[k]·params_k.
  void backward(std::span<const double> params, const Cache& cache,
                std::span<const QuadCostGrad> upstream, std::span<double> grad) const;
  void backward(const Cache& cache, std::span<const QuadCostGrad> upstream,
                std::span<double> grad) const {
    backward(params_, cache, upstream, grad);
  }

 private:
  double step_feature(int k) const;

  CostNetConfig config_;
  Mlp mlp_;
  std::vector<double> params_;
};

}  // namespace aeos
