#include "aeos/mpc/mpc.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>

#include "aeos/common/angles.hpp"
#include "aeos/common/error.hpp"

namespace aeos {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

int size_of(const MpcProblem& p) { return p.config.horizon + 1; }

void check_problem(const MpcProblem& p) {
  p.config.validate();
  if (!p.costs.empty() && static_cast<int>(p.costs.size()) != size_of(p)) {
    throw InputError("mpc: expected one cost per horizon step");
  }
  if (!std::isfinite(p.theta_t)) throw InputError("mpc: non-finite start angle");
}

VectorXd rollout(const MpcProblem& p, const VectorXd& omega) {
  VectorXd theta(omega.size());
  double acc = p.theta_t;
  for (Eigen::Index k = 0; k < omega.size(); ++k) {
    acc += p.config.dt * omega[k];
    theta[k] = acc;
  }
  return theta;
}

double cost_error(const QuadCostParams& c, double theta, bool centered) {
  return centered ? wrap_pi(theta - c.theta_ref) : theta;
}

// H = 2ρI + diag(q_ω) + Aᵀ diag(q_θ) A.
MatrixXd quadratic_hessian(const MpcProblem& p, const MatrixXd& a) {
  const int n = size_of(p);
  MatrixXd h = 2.0 * p.config.rho * MatrixXd::Identity(n, n);
  if (!p.costs.empty()) {
    VectorXd qt(n);
    for (int k = 0; k < n; ++k) {
      h(k, k) += p.costs[static_cast<std::size_t>(k)].q_omega;
      qt[k] = p.costs[static_cast<std::size_t>(k)].q_theta;
    }
    h.noalias() += a.transpose() * qt.asDiagonal() * a;
  }
  return h;
}

/// min ½ωᵀHω + bᵀω subject to |ω| <= bound, by a primal active set. The
/// problem is small and strictly convex, so this terminates quickly.
VectorXd box_qp(const MatrixXd& h, const VectorXd& b, double bound, std::vector<char>& fixed) {
  const Eigen::Index n = b.size();
  VectorXd x = VectorXd::Zero(n);
  fixed.assign(static_cast<std::size_t>(n), 0);
  for (int pass = 0; pass < 4 * static_cast<int>(n) + 4; ++pass) {
    std::vector<Eigen::Index> free_idx;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!fixed[static_cast<std::size_t>(i)]) free_idx.push_back(i);
    }
    const auto m = static_cast<Eigen::Index>(free_idx.size());
    if (m > 0) {
      MatrixXd hf(m, m);
      VectorXd rhs(m);
      for (Eigen::Index r = 0; r < m; ++r) {
        rhs[r] = -b[free_idx[static_cast<std::size_t>(r)]];
        for (Eigen::Index c = 0; c < n; ++c) {
          if (fixed[static_cast<std::size_t>(c)]) rhs[r] -= h(free_idx[static_cast<std::size_t>(r)], c) * x[c];
        }
        for (Eigen::Index c = 0; c < m; ++c) {
          hf(r, c) = h(free_idx[static_cast<std::size_t>(r)], free_idx[static_cast<std::size_t>(c)]);
        }
      }
      const VectorXd xf = hf.llt().solve(rhs);
      for (Eigen::Index r = 0; r < m; ++r) x[free_idx[static_cast<std::size_t>(r)]] = xf[r];
    }
    bool changed = false;
    // Clamp the worst violator among free coordinates.
    Eigen::Index worst = -1;
    double worst_excess = 0.0;
    for (auto i : free_idx) {
      const double excess = std::abs(x[i]) - bound;
      if (excess > worst_excess) {
        worst_excess = excess;
        worst = i;
      }
    }
    if (worst >= 0) {
      x[worst] = std::copysign(bound, x[worst]);
      fixed[static_cast<std::size_t>(worst)] = 1;
      changed = true;
    } else {
      // Release a fixed coordinate whose gradient points back inside.
      const VectorXd g = h * x + b;
      Eigen::Index release = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!fixed[static_cast<std::size_t>(i)]) continue;
        const double inward = x[i] > 0 ? g[i] : -g[i];  // > 0: moving inward lowers J
        if (inward > best) {
          best = inward;
          release = i;
        }
      }
      if (release >= 0) {
        fixed[static_cast<std::size_t>(release)] = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return x;
}

}  // namespace

void MpcConfig::validate() const {
  if (horizon < 1) throw ConfigError("mpc: horizon must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("mpc: dt must be > 0");
  if (!(rho > 0.0)) throw ConfigError("mpc: rho must be > 0");
  if (!(omega_max > 0.0)) throw ConfigError("mpc: omega_max must be > 0");
  if (!(relaxation > 0.0 && relaxation <= 1.0)) throw ConfigError("mpc: relaxation must be in (0, 1]");
  if (max_iterations < 1) throw ConfigError("mpc: max_iterations must be >= 1");
}

MatrixXd integration_matrix(int horizon, double dt) {
  if (horizon < 1) throw InputError("integration_matrix: horizon must be >= 1");
  const int n = horizon + 1;
  MatrixXd a = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) a(i, j) = dt;
  }
  return a;
}

double mpc_objective(const MpcProblem& p, const VectorXd& omega) {
  const VectorXd theta = rollout(p, omega);
  double j = 0.0;
  for (Eigen::Index k = 0; k < omega.size(); ++k) {
    if (p.surrogate != nullptr) j += p.config.unc_weight * surrogate_cost(*p.surrogate, theta[k]).cost;
    if (!p.costs.empty()) {
      j += eval_cost(p.costs[static_cast<std::size_t>(k)], theta[k], omega[k], p.config.centered).cost;
    }
    j += p.config.rho * omega[k] * omega[k];
  }
  return j;
}

VectorXd mpc_gradient(const MpcProblem& p, const VectorXd& omega) {
  const VectorXd theta = rollout(p, omega);
  const Eigen::Index n = omega.size();
  VectorXd d_theta = VectorXd::Zero(n);
  VectorXd g = 2.0 * p.config.rho * omega;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (p.surrogate != nullptr) d_theta[k] += p.config.unc_weight * surrogate_cost(*p.surrogate, theta[k]).gradient;
    if (!p.costs.empty()) {
      const auto c = eval_cost(p.costs[static_cast<std::size_t>(k)], theta[k], omega[k], p.config.centered);
      d_theta[k] += c.d_theta;
      g[k] += c.d_omega;
    }
  }
  // Aᵀ d_theta: suffix sums times Δt.
  double acc = 0.0;
  for (Eigen::Index k = n; k-- > 0;) {
    acc += d_theta[k];
    g[k] += p.config.dt * acc;
  }
  return g;
}

namespace {

double projected_residual(const MpcProblem& p, const VectorXd& omega) {
  const VectorXd g = mpc_gradient(p, omega);
  const double bound = p.config.omega_max;
  double r = 0.0;
  for (Eigen::Index k = 0; k < omega.size(); ++k) {
    double gk = g[k];
    // At a bound only the component pointing further out is admissible.
    if (omega[k] >= bound && gk < 0.0) gk = 0.0;
    if (omega[k] <= -bound && gk > 0.0) gk = 0.0;
    r = std::max(r, std::abs(gk));
  }
  return r;
}

}  // namespace

MpcSolution solve_mpc(const MpcProblem& p) {
  check_problem(p);
  const MpcConfig& cfg = p.config;
  const int n = size_of(p);
  const MatrixXd a = integration_matrix(cfg.horizon, cfg.dt);
  const MatrixXd h = quadratic_hessian(p, a);
  const double bound = cfg.omega_max;

  VectorXd omega = VectorXd::Zero(n);
  double j_omega = mpc_objective(p, omega);
  VectorXd best = omega;
  double best_j = j_omega;
  MpcSolution sol;
  if (cfg.record_objectives) sol.objective_history.push_back(j_omega);
  std::vector<char> fixed;

  for (int it = 0; it < cfg.max_iterations; ++it) {
    const VectorXd theta = rollout(p, omega);
    VectorXd update(n);
    if (cfg.solver == MpcSolver::kSemiImplicit) {
      // Linear part of the model around the current angles: surrogate slope,
      // learned linear terms, and the fixed wrap offset of each centred error.
      VectorXd lin_theta = VectorXd::Zero(n), lin_omega = VectorXd::Zero(n);
      for (int k = 0; k < n; ++k) {
        if (p.surrogate != nullptr) lin_theta[k] += cfg.unc_weight * surrogate_cost(*p.surrogate, theta[k]).gradient;
        if (!p.costs.empty()) {
          const auto& c = p.costs[static_cast<std::size_t>(k)];
          const double offset = cost_error(c, theta[k], cfg.centered) - theta[k];
          lin_theta[k] += c.q_theta * (p.theta_t + offset) + c.l_theta;
          lin_omega[k] += c.l_omega;
        }
      }
      const VectorXd b = a.transpose() * lin_theta + lin_omega;
      update = box_qp(h, b, bound, fixed);
    } else {
      const VectorXd g = mpc_gradient(p, omega) - 2.0 * cfg.rho * omega;
      update = (-g / (2.0 * cfg.rho)).cwiseMax(-bound).cwiseMin(bound);
    }
    sol.iterations = it + 1;

    const double j_update = mpc_objective(p, update);
    if (j_update < best_j) {
      best_j = j_update;
      best = update;
    }
    if ((update - omega).lpNorm<Eigen::Infinity>() < cfg.tolerance) {
      sol.converged = true;
      omega = update;
      j_omega = j_update;
      break;
    }
    if (cfg.solver == MpcSolver::kSemiImplicit) {
      // The update minimizes a model of J: backtrack along it (1, α, α², ...)
      // until the true objective does not rise.
      bool moved = false;
      for (double step = 1.0; step >= 1e-3; step *= cfg.relaxation) {
        const VectorXd trial = step == 1.0 ? update : ((1.0 - step) * omega + step * update).eval();
        const double j_trial = step == 1.0 ? j_update : mpc_objective(p, trial);
        if (j_trial <= j_omega) {
          omega = trial;
          j_omega = j_trial;
          moved = true;
          break;
        }
      }
      if (!moved) break;  // stalled on a kink of the surrogate
    } else {
      omega = (1.0 - cfg.relaxation) * omega + cfg.relaxation * update;
      j_omega = mpc_objective(p, omega);
    }
    if (cfg.record_objectives) sol.objective_history.push_back(j_omega);
    if (j_omega < best_j) {
      best_j = j_omega;
      best = omega;
    }
  }
  sol.omega = sol.converged ? omega : best;
  sol.theta = rollout(p, sol.omega);
  sol.objective = mpc_objective(p, sol.omega);
  sol.residual = projected_residual(p, sol.omega);
  sol.clamped = (sol.omega.array().abs() >= bound).any();
  return sol;
}

MpcParamGradient mpc_param_gradient(const MpcProblem& p, const MpcSolution& sol, double upstream) {
  check_problem(p);
  const int n = size_of(p);
  MpcParamGradient out;
  out.d_costs.assign(static_cast<std::size_t>(n), QuadCostGrad{});
  if (p.costs.empty()) return out;
  const double bound = p.config.omega_max;
  std::vector<int> free_idx;
  for (int k = 0; k < n; ++k) {
    if (std::abs(sol.omega[k]) < bound) free_idx.push_back(k);
  }
  if (free_idx.empty() || free_idx.front() != 0) {
    out.clamped = true;
    return out;
  }
  out.clamped = static_cast<int>(free_idx.size()) < n;
  const MatrixXd a = integration_matrix(p.config.horizon, p.config.dt);
  const MatrixXd h = quadratic_hessian(p, a);
  const auto m = static_cast<Eigen::Index>(free_idx.size());
  MatrixXd hf(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) hf(r, c) = h(free_idx[static_cast<std::size_t>(r)], free_idx[static_cast<std::size_t>(c)]);
  }
  Eigen::LLT<MatrixXd> llt(hf);
  if (llt.info() != Eigen::Success) throw InputError("mpc: Hessian not positive definite");
  VectorXd e0 = VectorXd::Zero(m);
  e0[0] = 1.0;
  const VectorXd vf = llt.solve(e0);
  VectorXd v = VectorXd::Zero(n);
  for (Eigen::Index r = 0; r < m; ++r) v[free_idx[static_cast<std::size_t>(r)]] = vf[r];
  const VectorXd av = a * v;
  for (int k = 0; k < n; ++k) {
    const auto& c = p.costs[static_cast<std::size_t>(k)];
    const double e = cost_error(c, sol.theta[k], p.config.centered);
    auto& d = out.d_costs[static_cast<std::size_t>(k)];
    // dω*_0/dp = -[(A v)_k ∂g_θ,k/∂p + v_k ∂g_ω,k/∂p]
    d.q_theta = -upstream * av[k] * e;
    d.l_theta = -upstream * av[k];
    d.theta_ref = p.config.centered ? upstream * av[k] * c.q_theta : 0.0;
    d.q_omega = -upstream * v[k] * sol.omega[k];
    d.l_omega = -upstream * v[k];
  }
  return out;
}

MpcParamGradient policy_gradient(const MpcProblem& p, const MpcSolution& sol, double upstream,
                                 const CostNet& net, const CostNet::Cache& cache,
                                 std::span<double> grad) {
  auto g = mpc_param_gradient(p, sol, upstream);
  if (!g.clamped || std::any_of(g.d_costs.begin(), g.d_costs.end(), [](const QuadCostGrad& d) {
        return d.q_theta != 0.0 || d.q_omega != 0.0 || d.l_theta != 0.0 || d.l_omega != 0.0 ||
               d.theta_ref != 0.0;
      })) {
    net.backward(cache, g.d_costs, grad);
  }
  return g;
}

}  // namespace aeos
