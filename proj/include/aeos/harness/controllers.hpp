#pragma once

#include <memory>
#include <optional>
#include <string>

#include "aeos/harness/config.hpp"

namespace aeos {

enum class ControllerKind { kFixedRate, kRandom, kMpcOnly, kAeosNoUnc, kAeos };

struct ControllerSpec {
  ControllerKind kind = ControllerKind::kFixedRate;
  double rate = 1.0;  // rad/s, fixed-rate only

  /// Names: fixed-slow (1 rad/s), fixed-fast (8 rad/s), fixed:<rate>,
  /// random, mpc, aeos-nounc, aeos. Throws ConfigError otherwise.
  static ControllerSpec parse(const std::string& name);
  std::string label() const;
  bool learned() const { return kind == ControllerKind::kAeosNoUnc || kind == ControllerKind::kAeos; }
};

struct ControlDecision {
  double omega = 0.0;
  std::optional<double> mpc_residual;  // MPC controllers only
  bool converged = true;
};

class Controller {
 public:
  virtual ~Controller() = default;
  /// Called at episode start with the episode seed.
  virtual void reset(std::uint64_t seed) = 0;
  virtual ControlDecision decide(const EnvObservation& obs) = 0;
};

/// Network parameters for the learned controllers; shared read-only.
struct LearnedCost {
  CostNetConfig config;
  std::vector<double> params;
  bool trained = false;
};

/// Loads a checkpoint, or initializes a fresh network from `config` when
/// the path is empty.
std::shared_ptr<const LearnedCost> load_learned_cost(const std::string& checkpoint,
                                                     const AppConfig& config);

/// `learned` is required for the learned kinds.
std::unique_ptr<Controller> make_controller(const ControllerSpec& spec, const AppConfig& config,
                                            std::shared_ptr<const LearnedCost> learned = nullptr);

}  // namespace aeos
