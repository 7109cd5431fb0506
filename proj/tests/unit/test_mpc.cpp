#include <array>
#include <cmath>
#include <numbers>

#include "aeos/common/angles.hpp"
#include "aeos/common/error.hpp"
#include "aeos/mpc/mpc.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace aeos;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using std::numbers::pi;

namespace {

QuadCostParams random_cost(Rng& rng, double q_lo, double q_hi) {
  QuadCostParams c;
  c.q_theta = rng.uniform(q_lo, q_hi);
  c.q_omega = rng.uniform(q_lo, q_hi);
  c.l_theta = rng.uniform(-3.0, 3.0);
  c.l_omega = rng.uniform(-3.0, 3.0);
  c.theta_ref = rng.uniform(0.0, 2 * pi);
  return c;
}

MpcProblem random_problem(Rng& rng, int horizon, bool centered, double omega_max) {
  MpcProblem p;
  p.config.horizon = horizon;
  p.config.centered = centered;
  p.config.omega_max = omega_max;
  p.theta_t = centered ? rng.uniform(0.0, 2 * pi) : rng.uniform(-0.5, 0.5);
  for (int k = 0; k <= horizon; ++k) p.costs.push_back(random_cost(rng, 0.05, 5.0));
  return p;
}

UncertaintySamples random_samples(Rng& rng, int n) {
  UncertaintySamples s;
  s.theta0 = rng.uniform(0.0, 2 * pi);
  s.dtheta = 2 * pi / n;
  for (int i = 0; i < n; ++i) s.values.push_back(rng.uniform(0.5, 3.0));
  return s;
}

// Quadratic recovered from objective evaluations alone.
void probe_quadratic(const MpcProblem& p, MatrixXd& h, VectorXd& b, double& c) {
  const int n = p.config.horizon + 1;
  auto j = [&](const VectorXd& x) { return mpc_objective(p, x); };
  const VectorXd zero = VectorXd::Zero(n);
  c = j(zero);
  h.resize(n, n);
  b.resize(n);
  for (int i = 0; i < n; ++i) {
    VectorXd ei = VectorXd::Unit(n, i);
    b[i] = (j(ei) - j(-ei)) / 2.0;
    for (int k = 0; k < n; ++k) {
      VectorXd ek = VectorXd::Unit(n, k);
      h(i, k) = j(ei + ek) - j(ei) - j(ek) + c;
    }
  }
}

// Box-constrained QP by enumerating every lower/free/upper pattern.
VectorXd enumerate_box_qp(const MatrixXd& h, const VectorXd& b, double bound) {
  const int n = static_cast<int>(b.size());
  int patterns = 1;
  for (int i = 0; i < n; ++i) patterns *= 3;
  VectorXd best;
  double best_j = INFINITY;
  for (int code = 0; code < patterns; ++code) {
    VectorXd x = VectorXd::Zero(n);
    std::vector<int> state(n);
    int rem = code;
    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i) {
      state[i] = rem % 3 - 1;
      rem /= 3;
      if (state[i] == 0) free_idx.push_back(i);
      else x[i] = state[i] * bound;
    }
    const int m = static_cast<int>(free_idx.size());
    if (m > 0) {
      MatrixXd hf(m, m);
      VectorXd rhs(m);
      for (int r = 0; r < m; ++r) {
        rhs[r] = -b[free_idx[r]];
        for (int k = 0; k < n; ++k) {
          if (state[k] != 0) rhs[r] -= h(free_idx[r], k) * x[k];
        }
        for (int k = 0; k < m; ++k) hf(r, k) = h(free_idx[r], free_idx[k]);
      }
      const VectorXd xf = hf.fullPivLu().solve(rhs);
      for (int r = 0; r < m; ++r) x[free_idx[r]] = xf[r];
    }
    if ((x.array().abs() > bound + 1e-12).any()) continue;
    const double j = 0.5 * x.dot(h * x) + b.dot(x);
    if (j < best_j) {
      best_j = j;
      best = x;
    }
  }
  return best;
}

// Cost parameters driven by a handful of scalars: z_k = B_k φ + c_k.
struct ToyNet {
  int param_count;
  std::vector<Eigen::Matrix<double, 5, Eigen::Dynamic>> weights;
  std::vector<Eigen::Matrix<double, 5, 1>> offsets;
  CostBounds bounds;

  ToyNet(Rng& rng, int params, int steps) : param_count(params) {
    for (int k = 0; k < steps; ++k) {
      Eigen::Matrix<double, 5, Eigen::Dynamic> w(5, params);
      for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < params; ++c) w(r, c) = rng.uniform(-0.5, 0.5);
      }
      weights.push_back(w);
      Eigen::Matrix<double, 5, 1> o;
      o << rng.uniform(-11.5, -9.0), rng.uniform(-11.5, -9.0), rng.uniform(-0.5, 0.5),
          rng.uniform(-0.5, 0.5), rng.uniform(-2.0, 2.0);
      offsets.push_back(o);
    }
  }

  std::vector<std::array<double, 5>> heads(const VectorXd& phi) const {
    std::vector<std::array<double, 5>> out;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const Eigen::Matrix<double, 5, 1> z = weights[k] * phi + offsets[k];
      out.push_back({z[0], z[1], z[2], z[3], z[4]});
    }
    return out;
  }

  std::vector<QuadCostParams> costs(const VectorXd& phi) const {
    std::vector<QuadCostParams> out;
    for (const auto& z : heads(phi)) out.push_back(bound_head(std::span<const double, 5>(z), bounds));
    return out;
  }

  VectorXd backward(const VectorXd& phi, const std::vector<QuadCostGrad>& d_costs) const {
    VectorXd g = VectorXd::Zero(param_count);
    const auto zs = heads(phi);
    for (std::size_t k = 0; k < weights.size(); ++k) {
      std::array<double, 5> dz{};
      bound_head_backward(std::span<const double, 5>(zs[k]), d_costs[k], bounds,
                          std::span<double, 5>(dz));
      g += weights[k].transpose() * Eigen::Map<const Eigen::Matrix<double, 5, 1>>(dz.data());
    }
    return g;
  }
};

bool near_knot(const UncertaintySamples& s, const VectorXd& theta, double margin) {
  for (Eigen::Index k = 0; k < theta.size(); ++k) {
    const double x = wrap_two_pi(theta[k] - s.theta0) / s.dtheta;
    if (std::abs(x - std::round(x)) * s.dtheta < margin) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("integration matrix is lower triangular with the step on and below the diagonal") {
  const MatrixXd a = integration_matrix(3, 0.1);
  CHECK(a.rows() == 4);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) CHECK(a(i, j) == (j <= i ? 0.1 : 0.0));
  }
  CHECK_THROWS_AS(integration_matrix(0, 0.1), InputError);
}

TEST_CASE("analytic gradient matches central differences") {
  Rng rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    MpcProblem p = random_problem(rng, 6, trial % 2 == 0, 8.0);
    UncertaintySamples s = random_samples(rng, 36);
    if (trial % 3 != 0) p.surrogate = &s;
    VectorXd w(7);
    for (int k = 0; k < 7; ++k) w[k] = rng.uniform(-3.0, 3.0);
    const VectorXd g = mpc_gradient(p, w);
    if (p.surrogate != nullptr && near_knot(s, p.theta_t * VectorXd::Ones(7) + integration_matrix(6, 0.1) * w, 1e-4)) continue;
    for (int k = 0; k < 7; ++k) {
      const double h = 1e-6;
      VectorXd wp = w, wm = w;
      wp[k] += h;
      wm[k] -= h;
      const double fd = (mpc_objective(p, wp) - mpc_objective(p, wm)) / (2 * h);
      CHECK(std::abs(fd - g[k]) <= 1e-5 * std::max(1.0, std::abs(g[k])));
    }
  }
}

TEST_CASE("quadratic problems match a dense box-constrained oracle") {
  Rng rng(11);
  int clamped = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const double bound = trial % 2 == 0 ? 100.0 : 1.5;
    MpcProblem p = random_problem(rng, 4, false, bound);
    MatrixXd h;
    VectorXd b;
    double c;
    probe_quadratic(p, h, b, c);
    const VectorXd oracle = enumerate_box_qp(h, b, bound);
    const MpcSolution sol = solve_mpc(p);
    CHECK(sol.converged);
    CHECK((sol.omega - oracle).lpNorm<Eigen::Infinity>() < 1e-6);
    clamped += sol.clamped ? 1 : 0;
  }
  CHECK(clamped > 5);
}

TEST_CASE("converged unclamped solutions are stationary") {
  Rng rng(17);
  int checked = 0;
  for (int trial = 0; trial < 80; ++trial) {
    MpcProblem p = random_problem(rng, 10, true, 50.0);
    const MpcSolution sol = solve_mpc(p);
    if (!sol.converged || sol.clamped) continue;
    ++checked;
    CHECK(mpc_gradient(p, sol.omega).lpNorm<Eigen::Infinity>() < 1e-6);
    CHECK(sol.residual < 1e-6);
  }
  CHECK(checked > 60);
}

TEST_CASE("surrogate kinks either converge to a stationary point or report non-convergence") {
  Rng rng(19);
  for (int trial = 0; trial < 40; ++trial) {
    MpcProblem p = random_problem(rng, 10, true, 50.0);
    UncertaintySamples s = random_samples(rng, 36);
    p.surrogate = &s;
    const MpcSolution sol = solve_mpc(p);
    if (sol.converged && !sol.clamped) CHECK(sol.residual < 1e-6);
    CHECK(sol.objective <= mpc_objective(p, VectorXd::Zero(11)) + 1e-12);
  }
}

TEST_CASE("objective does not increase over relaxed iterations on convex problems") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    MpcProblem p = random_problem(rng, 10, false, trial % 2 == 0 ? 100.0 : 1.0);
    p.config.record_objectives = true;
    for (MpcSolver solver : {MpcSolver::kSemiImplicit, MpcSolver::kFixedPoint}) {
      p.config.solver = solver;
      if (solver == MpcSolver::kFixedPoint) {
        // Keep the explicit map contractive: small curvature against ρ.
        p.config.rho = 2.0;
        for (auto& c : p.costs) {
          c.q_theta *= 0.05;
          c.q_omega *= 0.05;
        }
      }
      const MpcSolution sol = solve_mpc(p);
      const auto& hist = sol.objective_history;
      REQUIRE(hist.size() >= 2);
      for (std::size_t i = 1; i < hist.size(); ++i) CHECK(hist[i] <= hist[i - 1] + 1e-9 * std::abs(hist[i - 1]));
    }
  }
}

TEST_CASE("solutions respect the rate limit and the angle rollout") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    MpcProblem p = random_problem(rng, 10, true, 2.0);
    UncertaintySamples s = random_samples(rng, 36);
    p.surrogate = &s;
    p.config.unc_weight = rng.uniform(0.0, 20.0);
    const MpcSolution sol = solve_mpc(p);
    CHECK(sol.omega.size() == 11);
    CHECK((sol.omega.array().abs() <= 2.0).all());
    const VectorXd expect = p.theta_t * VectorXd::Ones(11) + integration_matrix(10, 0.1) * sol.omega;
    CHECK((sol.theta - expect).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK(sol.objective <= mpc_objective(p, VectorXd::Zero(11)) + 1e-12);
  }
}

TEST_CASE("uncertainty-only problem turns toward the cheapest direction") {
  UncertaintySamples s;
  s.theta0 = 0.0;
  s.dtheta = 2 * pi / 36;
  for (int i = 0; i < 36; ++i) s.values.push_back(2.0 + std::cos(s.theta0 + i * s.dtheta));
  MpcProblem p;
  p.surrogate = &s;
  p.theta_t = 0.3;  // cost falls with increasing angle here
  p.config.unc_weight = 10.0;
  const MpcSolution sol = solve_mpc(p);
  CHECK(sol.omega[0] > 0.0);
  p.theta_t = -0.3;
  CHECK(solve_mpc(p).omega[0] < 0.0);
}

TEST_CASE("explicit fixed-point mode agrees on well-conditioned problems") {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    MpcProblem p;
    p.config.horizon = 5;
    p.config.rho = 1.0;
    p.config.centered = false;
    p.config.omega_max = 100.0;
    for (int k = 0; k <= 5; ++k) {
      QuadCostParams c = random_cost(rng, 0.01, 0.2);
      p.costs.push_back(c);
    }
    const MpcSolution implicit = solve_mpc(p);
    p.config.solver = MpcSolver::kFixedPoint;
    p.config.max_iterations = 2000;
    const MpcSolution fixed = solve_mpc(p);
    CHECK(fixed.converged);
    CHECK((fixed.omega - implicit.omega).lpNorm<Eigen::Infinity>() < 1e-6);
  }
}

TEST_CASE("solver is deterministic") {
  Rng rng(31);
  MpcProblem p = random_problem(rng, 10, true, 3.0);
  UncertaintySamples s = random_samples(rng, 36);
  p.surrogate = &s;
  const MpcSolution a = solve_mpc(p);
  const MpcSolution b = solve_mpc(p);
  CHECK(a.omega == b.omega);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("implicit gradient matches finite differences through the solver") {
  Rng rng(37);
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int params = 2 + trial % 7;
    const int horizon = 3 + trial % 8;
    ToyNet net(rng, params, horizon + 1);
    VectorXd phi(params);
    for (int i = 0; i < params; ++i) phi[i] = rng.uniform(-1.0, 1.0);
    UncertaintySamples s = random_samples(rng, 36);
    MpcProblem p;
    p.config.horizon = horizon;
    p.config.omega_max = 100.0;
    p.theta_t = rng.uniform(0.0, 2 * pi);
    if (trial % 2 == 1) p.surrogate = &s;

    auto first_rate = [&](const VectorXd& x) {
      MpcProblem q = p;
      q.costs = net.costs(x);
      return solve_mpc(q).omega[0];
    };
    p.costs = net.costs(phi);
    const MpcSolution sol = solve_mpc(p);
    if (!sol.converged || sol.clamped) continue;
    if (p.surrogate != nullptr && near_knot(s, sol.theta, 1e-4)) continue;
    const double upstream = rng.uniform(0.5, 2.0);
    const auto g = mpc_param_gradient(p, sol, upstream);
    const VectorXd analytic = net.backward(phi, g.d_costs);
    for (int i = 0; i < params; ++i) {
      const double h = 1e-6;
      VectorXd xp = phi, xm = phi;
      xp[i] += h;
      xm[i] -= h;
      const double fd = upstream * (first_rate(xp) - first_rate(xm)) / (2 * h);
      CHECK(std::abs(fd - analytic[i]) <= 1e-4 * std::max(std::abs(fd), 1e-3));
    }
    ++checked;
  }
  CHECK(checked > 20);
}

TEST_CASE("policy gradient is linear in the upstream value and zero when clamped") {
  Rng rng(41);
  MpcProblem p = random_problem(rng, 6, true, 100.0);
  const MpcSolution sol = solve_mpc(p);
  const auto g1 = mpc_param_gradient(p, sol, 1.0);
  const auto g3 = mpc_param_gradient(p, sol, -3.0);
  const auto g0 = mpc_param_gradient(p, sol, 0.0);
  for (std::size_t k = 0; k < g1.d_costs.size(); ++k) {
    CHECK(g3.d_costs[k].q_theta == doctest::Approx(-3.0 * g1.d_costs[k].q_theta).epsilon(1e-12));
    CHECK(g3.d_costs[k].l_omega == doctest::Approx(-3.0 * g1.d_costs[k].l_omega).epsilon(1e-12));
    CHECK(g3.d_costs[k].theta_ref == doctest::Approx(-3.0 * g1.d_costs[k].theta_ref).epsilon(1e-12));
    CHECK(g0.d_costs[k].q_theta == 0.0);
    CHECK(g0.d_costs[k].l_theta == 0.0);
  }

  // Force the first rate onto its bound.
  MpcProblem c = p;
  c.config.omega_max = 0.5;
  c.costs[0].l_omega = -10.0;
  c.costs[0].q_omega = 0.05;
  const MpcSolution clamped = solve_mpc(c);
  REQUIRE(std::abs(clamped.omega[0]) == 0.5);
  const auto gc = mpc_param_gradient(c, clamped, 1.0);
  CHECK(gc.clamped);
  for (const auto& d : gc.d_costs) {
    CHECK(d.q_theta == 0.0);
    CHECK(d.q_omega == 0.0);
    CHECK(d.l_theta == 0.0);
    CHECK(d.l_omega == 0.0);
    CHECK(d.theta_ref == 0.0);
  }
}

TEST_CASE("policy gradient flows into network parameters") {
  CostNetConfig cfg;
  cfg.pano_width = 4;
  cfg.pano_height = 2;
  cfg.hidden = 8;
  cfg.horizon = 4;
  cfg.q_bias_init = -10.0;
  CostNet net(cfg);
  PolicyObservation obs;
  obs.velocity = {1.0, 0.0, 0.0};
  obs.covariance_diag = {1e-3, 1e-3, 1e-3};
  obs.rotor_angle = 0.4;
  obs.pano.assign(8, 0.5);
  CostNet::Cache cache;
  MpcProblem p;
  p.config.horizon = 4;
  p.config.omega_max = 100.0;
  p.costs = net.forward(obs, &cache);
  const MpcSolution sol = solve_mpc(p);
  std::vector<double> grad(net.param_count(), 0.0);
  const auto g = policy_gradient(p, sol, 1.0, net, cache, grad);
  CHECK_FALSE(g.clamped);
  double norm = 0.0;
  for (double v : grad) norm += v * v;
  CHECK(norm > 0.0);
}

TEST_CASE("invalid problems are rejected") {
  MpcProblem p;
  p.config.horizon = 0;
  CHECK_THROWS_AS(solve_mpc(p), ConfigError);
  p.config.horizon = 3;
  p.config.rho = 0.0;
  CHECK_THROWS_AS(solve_mpc(p), ConfigError);
  p.config.rho = 0.05;
  p.costs.resize(2);
  CHECK_THROWS_AS(solve_mpc(p), InputError);
}
