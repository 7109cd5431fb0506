#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "aeos/common/error.hpp"
#include "aeos/costnet/checkpoint.hpp"
#include "aeos/costnet/costnet.hpp"
#include "aeos/simd/kernels.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace aeos;
using std::numbers::pi;

namespace {

CostNetConfig small_config() {
  CostNetConfig c;
  c.pano_width = 6;
  c.pano_height = 3;
  c.hidden = 12;
  c.horizon = 4;
  c.q_bias_init = 0.0;
  c.seed = 5;
  return c;
}

PolicyObservation random_obs(Rng& rng, const CostNetConfig& c) {
  PolicyObservation o;
  o.velocity = testing::random_vec(rng, 2.0);
  o.covariance_diag = testing::random_vec(rng, 0.01).cwiseAbs();
  o.rotor_angle = rng.uniform(0.0, 2 * pi);
  o.pano.resize(static_cast<std::size_t>(c.pano_width * c.pano_height));
  for (double& v : o.pano) v = rng.uniform();
  return o;
}

double weighted_sum(const std::vector<QuadCostParams>& out, const std::vector<QuadCostGrad>& up) {
  double s = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    s += out[k].q_theta * up[k].q_theta + out[k].q_omega * up[k].q_omega +
         out[k].l_theta * up[k].l_theta + out[k].l_omega * up[k].l_omega +
         out[k].theta_ref * up[k].theta_ref;
  }
  return s;
}

std::vector<QuadCostGrad> random_upstream(Rng& rng, int n) {
  std::vector<QuadCostGrad> up(static_cast<std::size_t>(n));
  for (auto& u : up) {
    // Scale the q entries down so every field contributes comparably.
    u = {rng.uniform(-1, 1) * 1e-4, rng.uniform(-1, 1) * 1e-4, rng.uniform(-1, 1),
         rng.uniform(-1, 1), rng.uniform(-1, 1)};
  }
  return up;
}

}  // namespace

TEST_CASE("quadratic cost values and gradients") {
  const QuadCostParams p{2.0, 2.0, 0.0, 0.0, 0.0};
  const auto v = eval_cost(p, 1.0, 1.0);
  CHECK(v.cost == 2.0);
  CHECK(v.d_theta == 2.0);
  CHECK(v.d_omega == 2.0);
  const QuadCostParams q{3.0, 5.0, 0.0, 0.0, 1.2};
  const auto m = eval_cost(q, 1.2, 0.0);
  CHECK(m.cost == 0.0);
  CHECK(m.d_theta == 0.0);
  CHECK(m.d_omega == 0.0);

  Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const QuadCostParams r{rng.uniform(0.1, 50), rng.uniform(0.1, 50), rng.uniform(-10, 10),
                           rng.uniform(-10, 10), rng.uniform(0, 2 * pi)};
    const double th = r.theta_ref + rng.uniform(-2.5, 2.5), om = rng.uniform(-8, 8);
    // Central differences are exact on a quadratic, so a wide step only
    // removes rounding noise.
    const double h = 1e-3;
    const auto a = eval_cost(r, th, om);
    const double fdt = (eval_cost(r, th + h, om).cost - eval_cost(r, th - h, om).cost) / (2 * h);
    const double fdo = (eval_cost(r, th, om + h).cost - eval_cost(r, th, om - h).cost) / (2 * h);
    CHECK(std::abs(a.d_theta - fdt) <= 1e-8 * std::max(1.0, std::abs(fdt)));
    CHECK(std::abs(a.d_omega - fdo) <= 1e-8 * std::max(1.0, std::abs(fdo)));
    // Raw mode ignores the reference angle.
    CHECK(eval_cost(r, th, om, false).d_theta == doctest::Approx(r.q_theta * th + r.l_theta));
  }
}

TEST_CASE("zero network emits mid-range parameters") {
  CostNet net(small_config());
  std::fill(net.params().begin(), net.params().end(), 0.0);
  Rng rng(1);
  const auto out = net.forward(random_obs(rng, net.config()));
  REQUIRE(out.size() == 5u);
  for (const auto& p : out) {
    CHECK(p.q_theta == doctest::Approx(50000.05).epsilon(1e-15));
    CHECK(p.q_omega == doctest::Approx(50000.05).epsilon(1e-15));
    CHECK(p.l_theta == 0.0);
    CHECK(p.theta_ref == doctest::Approx(pi));
  }
}

TEST_CASE("outputs respect bounds and are convex") {
  CostNetConfig c = small_config();
  Rng rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    c.seed = rng.next_u64();
    CostNet net(c);
    const double scale = std::pow(10.0, rng.uniform(0.0, 3.0));
    for (double& w : net.params()) w *= scale;
    for (const auto& p : net.forward(random_obs(rng, c))) {
      CHECK(p.q_theta >= 0.1);
      CHECK(p.q_theta <= 1e5);
      CHECK(p.q_omega >= 0.1);
      CHECK(p.q_omega <= 1e5);
      CHECK(std::abs(p.l_theta) <= 10.0);
      CHECK(std::abs(p.l_omega) <= 10.0);
      // Midpoint convexity on pairs that do not straddle the seam.
      const double t1 = p.theta_ref + rng.uniform(-1.5, 1.5), t2 = p.theta_ref + rng.uniform(-1.5, 1.5);
      const double w1 = rng.uniform(-8, 8), w2 = rng.uniform(-8, 8);
      const double mid = eval_cost(p, 0.5 * (t1 + t2), 0.5 * (w1 + w2)).cost;
      const double avg = 0.5 * (eval_cost(p, t1, w1).cost + eval_cost(p, t2, w2).cost);
      CHECK(mid <= avg + 1e-9 * std::abs(avg));
    }
  }
}

TEST_CASE("forward is pure; shared mode repeats one step") {
  CostNetConfig c = small_config();
  CostNet net(c);
  Rng rng(4);
  const auto obs = random_obs(rng, c);
  const auto a = net.forward(obs), b = net.forward(obs);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].q_theta == b[k].q_theta);
    CHECK(a[k].theta_ref == b[k].theta_ref);
  }
  CHECK(a.front().q_theta != a.back().q_theta);
  c.per_step = false;
  CostNet shared(c);
  const auto s = shared.forward(obs);
  for (const auto& p : s) CHECK(p.l_omega == s.front().l_omega);

  PolicyObservation bad = obs;
  bad.velocity.x() = std::nan("");
  CHECK_THROWS_AS(net.forward(bad), InputError);
}

TEST_CASE("costnet backward matches finite differences") {
  for (bool per_step : {true, false}) {
    CostNetConfig c = small_config();
    c.per_step = per_step;
    CostNet net(c);
    Rng rng(per_step ? 17 : 18);
    const auto obs = random_obs(rng, c);
    const auto up = random_upstream(rng, net.steps());
    CostNet::Cache cache;
    net.forward(obs, &cache);
    std::vector<double> grad(net.param_count(), 0.0);
    net.backward(cache, up, grad);

    int checked = 0;
    for (int i = 0; i < 400 && checked < 50; ++i) {
      const auto idx = static_cast<std::size_t>(rng.next_u64() % net.param_count());
      if (std::abs(grad[idx]) < 1e-4) continue;
      std::vector<double> p = net.params();
      const double h = 1e-4;
      p[idx] += h;
      const double plus = weighted_sum(net.forward(p, obs, nullptr), up);
      p[idx] -= 2 * h;
      const double minus = weighted_sum(net.forward(p, obs, nullptr), up);
      const double fd = (plus - minus) / (2 * h);
      CHECK(std::abs(grad[idx] - fd) / std::abs(fd) < 1e-6);
      ++checked;
    }
    CHECK(checked >= 20);

    std::vector<double> zero(net.param_count(), 0.0);
    net.backward(cache, std::vector<QuadCostGrad>(static_cast<std::size_t>(net.steps())), zero);
    CHECK(std::all_of(zero.begin(), zero.end(), [](double g) { return g == 0.0; }));
  }
}

TEST_CASE("sigmoid head gradient saturates") {
  const CostBounds b;
  const QuadCostGrad up{1.0, 1.0, 1.0, 1.0, 1.0};
  double prev = std::numeric_limits<double>::infinity();
  for (double z : {0.0, 5.0, 10.0, 20.0, 40.0}) {
    const std::array<double, 5> zs{z, z, z, z, z};
    std::array<double, 5> dz{};
    bound_head_backward(zs, up, b, dz);
    CHECK(std::abs(dz[2]) < prev);
    prev = std::abs(dz[2]);
    const std::array<double, 5> neg{-z, -z, -z, -z, -z};
    bound_head_backward(neg, up, b, dz);
    CHECK(std::abs(dz[2]) == doctest::Approx(prev));
  }
  CHECK(prev < 1e-15);
}

TEST_CASE("generic mlp input gradient") {
  Mlp mlp({5, 7, 3});
  std::vector<double> params(mlp.param_count());
  Rng rng(6);
  mlp.init(params, rng);
  std::vector<double> x{0.3, -0.2, 0.9, 0.1, -0.7}, dy{1.0, -2.0, 0.5};
  Mlp::Cache cache;
  mlp.forward(params, x, cache);
  std::vector<double> grad(mlp.param_count(), 0.0), dx(5);
  mlp.backward(params, cache, dy, grad, dx);
  auto f = [&](const std::vector<double>& xx) {
    Mlp::Cache c;
    mlp.forward(params, xx, c);
    const auto y = mlp.output(c);
    return y[0] * dy[0] + y[1] * dy[1] + y[2] * dy[2];
  };
  for (std::size_t i = 0; i < 5; ++i) {
    auto a = x, b = x;
    a[i] += 1e-6;
    b[i] -= 1e-6;
    CHECK(dx[i] == doctest::Approx((f(a) - f(b)) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("kernel tables agree on the forward pass") {
  const auto* wide = simd::avx2_kernels();
  if (wide == nullptr) return;
  CostNetConfig c;  // production shape
  CostNet net(c);
  Rng rng(8);
  const auto obs = random_obs(rng, c);
  simd::set_active(simd::scalar_kernels());
  const auto a = net.forward(obs);
  simd::set_active(*wide);
  const auto b = net.forward(obs);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(testing::rel_err(b[k].q_theta, a[k].q_theta) < 1e-9);
    CHECK(std::abs(b[k].theta_ref - a[k].theta_ref) < 1e-9);
  }
}

TEST_CASE("checkpoint round trip is bit exact") {
  CostNet net(small_config());
  round_to_f32(net.params());
  const auto stem = std::filesystem::temp_directory_path() / "aeos_test_ckpt" / "net";
  save_checkpoint(stem, net.params(), {{"seed", 5}, {"sizes", net.mlp().sizes()}});
  const auto loaded = load_checkpoint(stem);
  CHECK(loaded.values == net.params());
  CHECK(loaded.metadata["seed"] == 5);
  CHECK(loaded.metadata["count"] == net.param_count());
  {
    std::ofstream trunc(checkpoint_bin(stem), std::ios::binary | std::ios::trunc);
    trunc << "abc";
  }
  CHECK_THROWS_AS(load_checkpoint(stem), IoError);
  std::filesystem::remove_all(stem.parent_path());
  CHECK_THROWS_AS(load_checkpoint(stem), IoError);
}
