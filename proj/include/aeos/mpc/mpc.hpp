#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "aeos/costnet/costnet.hpp"
#include "aeos/uncertainty/surrogate.hpp"

namespace aeos {

enum class MpcSolver {
  kSemiImplicit,  // quadratic terms solved exactly, surrogate slope lagged
  kFixedPoint,    // ω <- clamp(-(∇_θ-and-ω cost terms) / 2ρ), damped
};

struct MpcConfig {
  int horizon = 10;         // T; decision vector has T + 1 entries
  double dt = 0.1;          // s
  double rho = 0.05;        // ω² weight
  double omega_max = 8.0;   // rad/s
  double unc_weight = 1.0;  // multiplies the surrogate cost
  double relaxation = 0.5;  // α in ω <- (1-α)ω + α·update
  int max_iterations = 200;
  double tolerance = 1e-8;  // on successive updates, ∞-norm
  MpcSolver solver = MpcSolver::kSemiImplicit;
  bool centered = true;     // quadratic cost centred on its reference angle
  bool record_objectives = false;

  /// Throws ConfigError on T < 1, dt <= 0, rho <= 0 or omega_max <= 0.
  void validate() const;
};

/// One horizon problem: θ_k = θ_t + Δt Σ_{j<=k} ω_j for k = 0..T, and
/// J = Σ_k [w·C_unc(θ_k) + C_k(θ_k, ω_k) + ρ ω_k²].
struct MpcProblem {
  MpcConfig config;
  double theta_t = 0.0;
  const UncertaintySamples* surrogate = nullptr;  // null: no uncertainty term
  std::vector<QuadCostParams> costs;              // empty: no learned term; else T + 1
};

struct MpcSolution {
  Eigen::VectorXd omega;  // T + 1
  Eigen::VectorXd theta;  // T + 1, unwrapped, exactly θ_t + A ω
  double objective = 0.0;
  double residual = 0.0;  // ∞-norm of the projected gradient
  int iterations = 0;
  bool converged = false;
  bool clamped = false;   // some ω_k sits on a bound
  std::vector<double> objective_history;  // J at each iterate, when recorded
};

/// (T+1)x(T+1) lower-triangular matrix with Δt on and below the diagonal.
Eigen::MatrixXd integration_matrix(int horizon, double dt);

double mpc_objective(const MpcProblem& problem, const Eigen::VectorXd& omega);
Eigen::VectorXd mpc_gradient(const MpcProblem& problem, const Eigen::VectorXd& omega);

/// Never throws on non-convergence: returns the best iterate with
/// converged = false.
MpcSolution solve_mpc(const MpcProblem& problem);

struct MpcParamGradient {
  std::vector<QuadCostGrad> d_costs;  // upstream · dω*_0 / d(cost params), per step
  bool clamped = false;               // ω*_0 on a bound: gradient is zero
};

/// Implicit-function gradient of the first applied rate with respect to
/// every cost parameter, scaled by `upstream` (dL/dω*_0). Coordinates on a
/// bound are held fixed.
MpcParamGradient mpc_param_gradient(const MpcProblem& problem, const MpcSolution& solution,
                                    double upstream);

/// Same, continued through the network: accumulates dL/dφ into `grad`.
MpcParamGradient policy_gradient(const MpcProblem& problem, const MpcSolution& solution,
                                 double upstream, const CostNet& net, const CostNet::Cache& cache,
                                 std::span<double> grad);

}  // namespace aeos
