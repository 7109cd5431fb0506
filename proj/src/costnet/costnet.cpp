#include "aeos/costnet/costnet.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "aeos/common/angles.hpp"
#include "aeos/common/error.hpp"
#include "aeos/simd/kernels.hpp"

namespace aeos {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

CostValue eval_cost(const QuadCostParams& p, double theta, double omega, bool centered) {
  const double e = centered ? wrap_pi(theta - p.theta_ref) : theta;
  CostValue v;
  v.cost = 0.5 * (p.q_theta * e * e + p.q_omega * omega * omega) + p.l_theta * e + p.l_omega * omega;
  v.d_theta = p.q_theta * e + p.l_theta;
  v.d_omega = p.q_omega * omega + p.l_omega;
  return v;
}

QuadCostParams bound_head(std::span<const double, 5> z, const CostBounds& b) {
  QuadCostParams p;
  p.q_theta = b.q_min + (b.q_max - b.q_min) * sigmoid(z[0]);
  p.q_omega = b.q_min + (b.q_max - b.q_min) * sigmoid(z[1]);
  p.l_theta = b.linear_bound * (2.0 * sigmoid(z[2]) - 1.0);
  p.l_omega = b.linear_bound * (2.0 * sigmoid(z[3]) - 1.0);
  p.theta_ref = kTwoPi * sigmoid(z[4]);
  // Guard the closed bounds against rounding at saturation.
  p.q_theta = std::clamp(p.q_theta, b.q_min, b.q_max);
  p.q_omega = std::clamp(p.q_omega, b.q_min, b.q_max);
  return p;
}

void bound_head_backward(std::span<const double, 5> z, const QuadCostGrad& g, const CostBounds& b,
                         std::span<double, 5> dz) {
  auto ds = [&](int i) {
    const double s = sigmoid(z[static_cast<std::size_t>(i)]);
    return s * (1.0 - s);
  };
  dz[0] = g.q_theta * (b.q_max - b.q_min) * ds(0);
  dz[1] = g.q_omega * (b.q_max - b.q_min) * ds(1);
  dz[2] = g.l_theta * 2.0 * b.linear_bound * ds(2);
  dz[3] = g.l_omega * 2.0 * b.linear_bound * ds(3);
  dz[4] = g.theta_ref * kTwoPi * ds(4);
}

PolicyObservation PolicyObservation::from_pano(const Eigen::Vector3d& velocity,
                                               const Eigen::Vector3d& covariance_diag,
                                               double rotor_angle, const PanoDepthMap& pano) {
  PolicyObservation o;
  o.velocity = velocity;
  o.covariance_diag = covariance_diag;
  o.rotor_angle = rotor_angle;
  o.pano.resize(pano.ranges().size());
  for (std::size_t i = 0; i < o.pano.size(); ++i) {
    const double r = pano.ranges()[i];
    o.pano[i] = r == PanoDepthMap::kNoReturn ? 1.0 : std::clamp(r / pano.max_range(), 0.0, 1.0);
  }
  return o;
}

std::vector<double> PolicyObservation::features() const {
  std::vector<double> f;
  f.reserve(kScalarFeatures + pano.size() + 1);
  for (int i = 0; i < 3; ++i) f.push_back(velocity[i]);
  for (int i = 0; i < 3; ++i) f.push_back(covariance_diag[i]);
  f.push_back(std::sin(rotor_angle));
  f.push_back(std::cos(rotor_angle));
  f.insert(f.end(), pano.begin(), pano.end());
  for (double v : f) {
    if (!std::isfinite(v)) throw InputError("policy observation has a non-finite feature");
  }
  return f;
}

CostNet::CostNet(const CostNetConfig& config)
    : config_(config),
      mlp_({config.input_size(), config.hidden, config.hidden, kHeadSize}) {
  if (config.horizon < 1) throw ConfigError("costnet: horizon must be >= 1");
  if (config.pano_width < 1 || config.pano_height < 1) throw ConfigError("costnet: bad pano size");
  if (!(config.bounds.q_min > 0.0) || !(config.bounds.q_max > config.bounds.q_min) ||
      !(config.bounds.linear_bound >= 0.0)) {
    throw ConfigError("costnet: invalid output bounds");
  }
  params_.resize(mlp_.param_count());
  Rng rng(config.seed);
  mlp_.init(params_, rng);
  const std::size_t head_bias = mlp_.bias_offset(2);
  params_[head_bias + 0] = config.q_bias_init;
  params_[head_bias + 1] = config.q_bias_init;
}

double CostNet::step_feature(int k) const {
  return static_cast<double>(k) / static_cast<double>(config_.horizon);
}

std::vector<QuadCostParams> CostNet::forward(const PolicyObservation& obs, Cache* cache) const {
  return forward(params_, obs, cache);
}

std::vector<QuadCostParams> CostNet::forward(std::span<const double> params,
                                             const PolicyObservation& obs, Cache* cache) const {
  if (params.size() != mlp_.param_count()) throw InputError("costnet: parameter size mismatch");
  const auto expected_pano = static_cast<std::size_t>(config_.pano_width * config_.pano_height);
  if (obs.pano.size() != expected_pano) throw InputError("costnet: pano size mismatch");
  Cache local;
  Cache& c = cache != nullptr ? *cache : local;
  c.base_input = obs.features();
  if (config_.per_step) c.base_input.push_back(0.0);

  const auto h = static_cast<std::size_t>(config_.hidden);
  std::vector<double> base(h);
  mlp_.layer_affine(params, 0, c.base_input, base);
  const std::size_t in = c.base_input.size();
  const double* w0 = params.data() + mlp_.weight_offset(0);

  const int distinct = config_.per_step ? steps() : 1;
  c.hidden.assign(static_cast<std::size_t>(distinct), std::vector<double>(2 * h));
  c.head.assign(static_cast<std::size_t>(distinct), {});
  std::vector<QuadCostParams> out;
  out.reserve(static_cast<std::size_t>(steps()));
  for (int k = 0; k < distinct; ++k) {
    auto& hid = c.hidden[static_cast<std::size_t>(k)];
    std::span<double> h1(hid.data(), h), h2(hid.data() + h, h);
    const double s = config_.per_step ? step_feature(k) : 0.0;
    for (std::size_t r = 0; r < h; ++r) {
      const double pre = base[r] + (config_.per_step ? w0[r * in + (in - 1)] * s : 0.0);
      h1[r] = std::max(pre, 0.0);
    }
    mlp_.layer_affine(params, 1, h1, h2);
    for (double& v : h2) v = std::max(v, 0.0);
    auto& z = c.head[static_cast<std::size_t>(k)];
    mlp_.layer_affine(params, 2, h2, z);
    out.push_back(bound_head(z, config_.bounds));
  }
  while (static_cast<int>(out.size()) < steps()) out.push_back(out.front());
  return out;
}

void CostNet::backward(std::span<const double> params, const Cache& cache,
                       std::span<const QuadCostGrad> upstream, std::span<double> grad) const {
  if (upstream.size() != static_cast<std::size_t>(steps())) throw InputError("costnet: upstream size mismatch");
  if (grad.size() != mlp_.param_count()) throw InputError("costnet: gradient size mismatch");
  const auto h = static_cast<std::size_t>(config_.hidden);
  const std::size_t in = cache.base_input.size();
  const int distinct = config_.per_step ? steps() : 1;

  // First-layer pre-activation gradient, summed over steps and weighted by
  // the step feature: the only two quantities the shared layer needs.
  std::vector<double> d1_sum(h, 0.0), d1_weighted(h, 0.0);
  std::vector<double> d2(h), d1(h);
  for (int k = 0; k < distinct; ++k) {
    QuadCostGrad g;
    if (config_.per_step) {
      g = upstream[static_cast<std::size_t>(k)];
    } else {
      for (const auto& u : upstream) {
        g.q_theta += u.q_theta;
        g.q_omega += u.q_omega;
        g.l_theta += u.l_theta;
        g.l_omega += u.l_omega;
        g.theta_ref += u.theta_ref;
      }
    }
    if (g.q_theta == 0.0 && g.q_omega == 0.0 && g.l_theta == 0.0 && g.l_omega == 0.0 &&
        g.theta_ref == 0.0) {
      continue;
    }
    const auto& hid = cache.hidden[static_cast<std::size_t>(k)];
    std::span<const double> h1(hid.data(), h), h2(hid.data() + h, h);
    std::array<double, 5> dz{};
    bound_head_backward(cache.head[static_cast<std::size_t>(k)], g, config_.bounds, dz);
    mlp_.layer_backward(params, 2, h2, dz, grad, d2);
    for (std::size_t i = 0; i < h; ++i) {
      if (h2[i] <= 0.0) d2[i] = 0.0;
    }
    mlp_.layer_backward(params, 1, h1, d2, grad, d1);
    const double s = config_.per_step ? step_feature(k) : 0.0;
    for (std::size_t i = 0; i < h; ++i) {
      if (h1[i] <= 0.0) continue;
      d1_sum[i] += d1[i];
      d1_weighted[i] += d1[i] * s;
    }
  }
  // Layer 0 against the base input (step slot zero), then the step column.
  mlp_.layer_backward(params, 0, cache.base_input, d1_sum, grad, {});
  if (config_.per_step) {
    double* gw = grad.data() + mlp_.weight_offset(0);
    for (std::size_t r = 0; r < h; ++r) gw[r * in + (in - 1)] += d1_weighted[r];
  }
}

}  // namespace aeos
