#include "aeos/harness/controllers.hpp"

#include <charconv>
#include <cmath>

#include "aeos/common/error.hpp"

namespace aeos {

ControllerSpec ControllerSpec::parse(const std::string& name) {
  ControllerSpec s;
  if (name == "fixed-slow") {
    s.rate = 1.0;
  } else if (name == "fixed-fast") {
    s.rate = 8.0;
  } else if (name.rfind("fixed:", 0) == 0) {
    const std::string v = name.substr(6);
    const auto res = std::from_chars(v.data(), v.data() + v.size(), s.rate);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size() || !std::isfinite(s.rate)) {
      throw ConfigError("controller: bad fixed rate in '" + name + "'");
    }
  } else if (name == "random") {
    s.kind = ControllerKind::kRandom;
  } else if (name == "mpc") {
    s.kind = ControllerKind::kMpcOnly;
  } else if (name == "aeos-nounc") {
    s.kind = ControllerKind::kAeosNoUnc;
  } else if (name == "aeos") {
    s.kind = ControllerKind::kAeos;
  } else {
    throw ConfigError("controller: unknown kind '" + name +
                      "' (fixed-slow, fixed-fast, fixed:<rate>, random, mpc, aeos-nounc, aeos)");
  }
  return s;
}

std::string ControllerSpec::label() const {
  switch (kind) {
    case ControllerKind::kFixedRate:
      if (rate == 1.0) return "fixed-slow";
      if (rate == 8.0) return "fixed-fast";
      {
        std::string r = std::to_string(rate);
        r.erase(r.find_last_not_of('0') + 1);
        if (!r.empty() && r.back() == '.') r.pop_back();
        return "fixed:" + r;
      }
    case ControllerKind::kRandom: return "random";
    case ControllerKind::kMpcOnly: return "mpc";
    case ControllerKind::kAeosNoUnc: return "aeos-nounc";
    case ControllerKind::kAeos: return "aeos";
  }
  return "?";
}

namespace {

class FixedRateController final : public Controller {
 public:
  explicit FixedRateController(double rate) : rate_(rate) {}
  void reset(std::uint64_t) override {}
  ControlDecision decide(const EnvObservation&) override { return {rate_, std::nullopt, true}; }

 private:
  double rate_;
};

class RandomController final : public Controller {
 public:
  explicit RandomController(double omega_max) : omega_max_(omega_max) {}
  void reset(std::uint64_t seed) override { rng_ = Rng(seed ^ 0xA5A5A5A5ULL); }
  ControlDecision decide(const EnvObservation&) override {
    return {rng_.uniform(-omega_max_, omega_max_), std::nullopt, true};
  }

 private:
  double omega_max_;
  Rng rng_;
};

class MpcController final : public Controller {
 public:
  MpcController(const PolicyConfig& config, std::shared_ptr<const LearnedCost> learned)
      : learned_(std::move(learned)),
        net_(learned_ ? std::make_unique<CostNet>(learned_->config) : nullptr),
        policy_(net_.get(), config) {
    if (net_) net_->params() = learned_->params;
  }
  void reset(std::uint64_t) override {}
  ControlDecision decide(const EnvObservation& obs) override {
    const PolicyDecision d = policy_.decide(obs);
    return {d.omega, d.solution.residual, d.solution.converged};
  }

 private:
  std::shared_ptr<const LearnedCost> learned_;
  std::unique_ptr<CostNet> net_;
  MpcPolicy policy_;
};

}  // namespace

std::shared_ptr<const LearnedCost> load_learned_cost(const std::string& checkpoint,
                                                     const AppConfig& config) {
  auto out = std::make_shared<LearnedCost>();
  if (checkpoint.empty()) {
    const CostNet net(config.net);
    out->config = config.net;
    out->params = net.params();
    return out;
  }
  LoadedPolicy p = load_policy_checkpoint(checkpoint);
  if (p.net.horizon != config.policy.mpc.horizon) {
    throw ConfigError("checkpoint horizon " + std::to_string(p.net.horizon) +
                      " differs from the configured MPC horizon");
  }
  if (p.net.pano_width != config.env.policy_pano_width || p.net.pano_height != config.env.policy_pano_height) {
    throw ConfigError("checkpoint pano size differs from the configured one");
  }
  out->config = p.net;
  out->params = std::move(p.params);
  out->trained = true;
  return out;
}

std::unique_ptr<Controller> make_controller(const ControllerSpec& spec, const AppConfig& config,
                                            std::shared_ptr<const LearnedCost> learned) {
  PolicyConfig pc = config.policy;
  switch (spec.kind) {
    case ControllerKind::kFixedRate:
      return std::make_unique<FixedRateController>(spec.rate);
    case ControllerKind::kRandom:
      return std::make_unique<RandomController>(config.env.scanner.omega_max);
    case ControllerKind::kMpcOnly:
      pc.use_learned = false;
      pc.use_uncertainty = true;
      return std::make_unique<MpcController>(pc, nullptr);
    case ControllerKind::kAeosNoUnc:
    case ControllerKind::kAeos:
      if (!learned) throw ConfigError("controller " + spec.label() + " needs a cost network");
      pc.use_learned = true;
      pc.use_uncertainty = spec.kind == ControllerKind::kAeos;
      return std::make_unique<MpcController>(pc, std::move(learned));
  }
  throw ConfigError("controller: unsupported kind");
}

}  // namespace aeos
