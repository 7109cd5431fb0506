#include <cmath>
#include <filesystem>
#include <numbers>

#include "aeos/common/error.hpp"
#include "aeos/costnet/checkpoint.hpp"
#include "aeos/rl/trainer.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace aeos;
namespace fs = std::filesystem;
using std::numbers::pi;

namespace {

CostNetConfig small_net(int w = 8, int h = 4) {
  CostNetConfig c;
  c.pano_width = w;
  c.pano_height = h;
  c.hidden = 16;
  c.horizon = 10;
  return c;
}

EnvObservation random_observation(Rng& rng, const CostNetConfig& net) {
  EnvObservation o;
  o.theta = rng.uniform(0.0, 2 * pi);
  o.policy.velocity = testing::random_vec(rng, 1.0);
  o.policy.covariance_diag = {rng.uniform(1e-4, 1e-2), rng.uniform(1e-4, 1e-2), rng.uniform(1e-4, 1e-2)};
  o.policy.rotor_angle = o.theta;
  for (int i = 0; i < net.pano_width * net.pano_height; ++i) o.policy.pano.push_back(rng.uniform(0.0, 1.0));
  o.uncertainty.theta0 = 0.0;
  o.uncertainty.dtheta = 2 * pi / 36;
  for (int i = 0; i < 36; ++i) o.uncertainty.values.push_back(rng.uniform(0.5, 2.0));
  return o;
}

std::vector<Transition> synthetic_batch(Rng& rng, const MpcPolicy& policy, const Critic& critic, int n,
                                        double sigma) {
  std::vector<Transition> batch;
  for (int i = 0; i < n; ++i) {
    Transition t;
    t.obs = random_observation(rng, small_net());
    t.features = t.obs.policy.features();
    t.mean = policy.decide(t.obs).omega;
    t.action = t.mean + sigma * rng.normal();
    t.log_prob = gaussian_log_prob(t.action, t.mean, sigma);
    t.reward = rng.uniform(-1.0, 1.0);
    t.value = critic.value(t.features, t.action);
    t.episode_end = (i % 16 == 15) || i == n - 1;
    batch.push_back(std::move(t));
  }
  return batch;
}

struct LearnerState {
  CostNet net;
  Critic critic;
  Adam actor_opt, critic_opt;
  explicit LearnerState(const CostNetConfig& cfg)
      : net(cfg),
        critic(static_cast<int>(cfg.input_size() - (cfg.per_step ? 1 : 0)), 8.0, CriticConfig{16, 2}),
        actor_opt(net.param_count()),
        critic_opt(critic.param_count()) {}
  Learner learner() { return Learner{net, critic, actor_opt, critic_opt}; }
};

std::shared_ptr<const Scene> small_room() {
  SceneParams p;
  p.duration = 80.0;
  return std::make_shared<const Scene>(generate_synthetic_scene(SceneKind::kRoom, 1, p));
}

TrainSetup small_setup(long total_steps) {
  TrainSetup s;
  s.env.policy_pano_width = 8;
  s.env.policy_pano_height = 4;
  s.net = small_net();
  s.critic.hidden = 16;
  s.train.total_steps = total_steps;
  s.train.episode_seconds = 3.0;
  s.train.rollout_steps = 30;
  s.train.checkpoint_every = 30;
  s.train.evaluate = false;
  s.train.ppo.minibatch = 16;
  return s;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("aeos_test_rl_" + name);
  fs::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("reward combines coverage gain and inverse relative error") {
  const RewardTerms r = compute_reward(5, 20, 0.05, {});
  CHECK(r.exploration == doctest::Approx(0.25));
  CHECK(r.odometry == doctest::Approx(20.0));
  CHECK(r.total == doctest::Approx(20.25));
  CHECK(compute_reward(0, 0, 0.0, {}).odometry == doctest::Approx(100.0));
  CHECK(compute_reward(0, 10, 1e-6, {}).odometry == doctest::Approx(100.0));
  const RewardTerms w = compute_reward(2, 4, 0.5, RewardWeights{2.0, 0.5, 0.01});
  CHECK(w.total == doctest::Approx(2.0 * 0.5 + 0.5 * 2.0));
  CHECK_THROWS_AS(compute_reward(3, 2, 0.1, {}), InputError);
  CHECK_THROWS_AS(compute_reward(1, 2, -0.1, {}), InputError);
  CHECK_THROWS_AS(compute_reward(1, 2, std::nan(""), {}), InputError);
}

TEST_CASE("GAE with unit discount and lambda is the Monte Carlo advantage") {
  const std::vector<double> r{1, 2, 3, 4, 5};
  const std::vector<double> v{0.5, -1, 2, 0.25, 3};
  const std::vector<char> end{0, 1, 0, 0, 1};
  const std::vector<double> boot{0, 0.0, 0, 0, 7.0};
  const auto a = compute_gae(r, v, end, boot, 1.0, 1.0);
  CHECK(a[0] == doctest::Approx(1 + 2 - 0.5));
  CHECK(a[1] == doctest::Approx(2 - (-1)));
  CHECK(a[2] == doctest::Approx(3 + 4 + 5 + 7 - 2));
  CHECK(a[3] == doctest::Approx(4 + 5 + 7 - 0.25));
  CHECK(a[4] == doctest::Approx(5 + 7 - 3));
}

TEST_CASE("GAE with zero lambda is the one-step temporal difference") {
  const std::vector<double> r{1, -2, 0.5};
  const std::vector<double> v{0.3, 0.7, -0.4};
  const std::vector<char> end{0, 0, 1};
  const std::vector<double> boot{0, 0, 2.0};
  const auto a = compute_gae(r, v, end, boot, 0.9, 0.0);
  CHECK(a[0] == doctest::Approx(1 + 0.9 * 0.7 - 0.3));
  CHECK(a[1] == doctest::Approx(-2 + 0.9 * -0.4 - 0.7));
  CHECK(a[2] == doctest::Approx(0.5 + 0.9 * 2.0 + 0.4));
  const std::vector<char> open{0, 0, 0};
  CHECK_THROWS_AS(compute_gae(r, v, open, boot, 0.9, 0.95), InputError);
}

TEST_CASE("gradient clipping rescales only large gradients") {
  std::vector<double> g{3.0, 4.0};
  CHECK(clip_grad_norm(g, 0.5) == doctest::Approx(5.0));
  CHECK(std::hypot(g[0], g[1]) == doctest::Approx(0.5));
  CHECK(g[0] / g[1] == doctest::Approx(0.75));
  std::vector<double> s{0.1, 0.2};
  clip_grad_norm(s, 0.5);
  CHECK(s[0] == 0.1);
  CHECK(s[1] == 0.2);
}

TEST_CASE("first Adam step moves every parameter by the learning rate") {
  Adam adam(3);
  std::vector<double> p{1.0, 2.0, 3.0};
  const std::vector<double> g{0.5, -2.0, 1e-3};
  adam.step(p, g, 0.01);
  CHECK(p[0] == doctest::Approx(0.99));
  CHECK(p[1] == doctest::Approx(2.01));
  CHECK(p[2] == doctest::Approx(2.99).epsilon(1e-4));
  CHECK(adam.steps() == 1);
}

TEST_CASE("zero advantages leave the cost network unchanged") {
  Rng rng(3);
  LearnerState st(small_net());
  MpcPolicy policy(&st.net, {});
  const auto batch = synthetic_batch(rng, policy, st.critic, 32, 0.3);
  const std::vector<double> before = st.net.params();
  const std::vector<double> zeros(batch.size(), 0.0);
  std::vector<double> returns(batch.size(), 1.0);
  PpoConfig cfg;
  cfg.minibatch = 16;
  cfg.normalize_advantages = false;
  auto learner = st.learner();
  const PpoStats stats = ppo_update_with_advantages(policy, learner, batch, zeros, returns, 0.3, 1e-3, cfg, rng);
  CHECK(st.net.params() == before);
  CHECK(stats.epochs == cfg.epochs);
}

TEST_CASE("normalized advantages are invariant to a constant shift") {
  auto run = [](double shift) {
    Rng rng(4);
    LearnerState st(small_net());
    MpcPolicy policy(&st.net, {});
    const auto batch = synthetic_batch(rng, policy, st.critic, 32, 0.3);
    std::vector<double> adv, ret;
    for (const auto& t : batch) {
      adv.push_back(t.reward + shift);
      ret.push_back(t.reward);
    }
    PpoConfig cfg;
    cfg.minibatch = 16;
    cfg.epochs = 2;
    auto learner = st.learner();
    ppo_update_with_advantages(policy, learner, batch, adv, ret, 0.3, 1e-3, cfg, rng);
    return st.net.params();
  };
  const auto a = run(0.0);
  const auto b = run(25.0);
  REQUIRE(a.size() == b.size());
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  CHECK(worst < 1e-9);
}

TEST_CASE("KL early stop ends the update after one epoch") {
  Rng rng(5);
  LearnerState st(small_net());
  MpcPolicy policy(&st.net, {});
  const auto batch = synthetic_batch(rng, policy, st.critic, 32, 0.3);
  PpoConfig cfg;
  cfg.minibatch = 16;
  cfg.kl_stop = 1e-300;
  auto learner = st.learner();
  const PpoStats stats = ppo_update(policy, learner, batch, 0.3, 1e-2, cfg, rng);
  CHECK(stats.epochs == 1);
  CHECK(stats.approx_kl > 0.0);
}

TEST_CASE("KL stop halts actor steps mid-epoch while the critic keeps training") {
  Rng rng(5);
  LearnerState st(small_net());
  MpcPolicy policy(&st.net, {});
  const auto batch = synthetic_batch(rng, policy, st.critic, 32, 0.3);
  PpoConfig cfg;
  cfg.minibatch = 8;
  cfg.epochs = 3;
  cfg.kl_stop = 1e-300;
  auto learner = st.learner();
  ppo_update(policy, learner, batch, 0.3, 1e-2, cfg, rng);
  // First minibatch sees the unchanged policy (KL 0) and steps; every later one is over the limit.
  CHECK(st.actor_opt.steps() == 1);
  CHECK(st.critic_opt.steps() == 12);
}

TEST_CASE("critic-ascent gradient matches finite differences on the linear heads") {
  Rng rng(6);
  const CostNetConfig cfg = small_net();
  LearnerState st(cfg);
  st.critic.mlp().init(st.critic.params(), rng);
  PolicyConfig pc;
  pc.use_uncertainty = false;
  MpcPolicy policy(&st.net, pc);
  std::vector<EnvObservation> obs;
  for (int i = 0; i < 6; ++i) obs.push_back(random_observation(rng, cfg));
  std::vector<double> params = st.net.params();
  const auto grad = critic_actor_gradient(policy, st.critic, params, obs);
  const std::size_t last = st.net.mlp().layer_count() - 1;
  const std::size_t bias = st.net.mlp().bias_offset(last);
  for (std::size_t head : {2u, 3u}) {
    const std::size_t i = bias + head;
    const double h = 1e-5;
    std::vector<double> p = params;
    p[i] += h;
    const double up = mean_critic_value(policy, st.critic, p, obs);
    p[i] -= 2 * h;
    const double down = mean_critic_value(policy, st.critic, p, obs);
    const double fd = (up - down) / (2 * h);
    INFO("head " << head << " analytic " << grad[i] << " fd " << fd);
    CHECK(std::abs(grad[i] - fd) <= 1e-3 * std::max(std::abs(fd), 1e-3));
  }
}

TEST_CASE("a minute-long episode is six hundred ticks") {
  ScanEnv env(small_room(), EnvConfig{});
  CHECK(env.episode_ticks(0.0, 60.0) == 600);
}

TEST_CASE("environment rollouts are deterministic in the seed") {
  const auto scene = small_room();
  auto trace = [&](std::uint64_t seed) {
    ScanEnv env(scene, EnvConfig{});
    env.reset(scene->trajectory.t_first(), 2.0, seed);
    std::vector<double> out;
    while (!env.done()) {
      const EnvStep s = env.step(3.0);
      out.push_back(s.reward.total);
      out.push_back(env.estimate_trajectory().poses().back().pose.translation().x());
    }
    return out;
  };
  const auto a = trace(9);
  CHECK(a.size() == 2 * 20);
  CHECK(a == trace(9));
  CHECK(a != trace(10));
}

TEST_CASE("zero training budget writes only the initial checkpoint") {
  const fs::path dir = fresh_dir("budget0");
  Trainer trainer({small_room()}, small_setup(0), 1, dir);
  const std::vector<double> initial = trainer.net().params();
  trainer.run();
  int checkpoints = 0;
  for (const auto& e : fs::directory_iterator(dir / "checkpoints"))
    if (e.path().extension() == ".json") ++checkpoints;
  CHECK(checkpoints == 1);
  CHECK(fs::exists(dir / "checkpoints" / "step_000000000.json"));
  CHECK(trainer.step() == 0);
  const LoadedPolicy loaded = load_policy_checkpoint(dir / "final");
  REQUIRE(loaded.params.size() == initial.size());
  for (std::size_t i = 0; i < initial.size(); ++i) CHECK(loaded.params[i] == static_cast<float>(initial[i]));
  fs::remove_all(dir);
}

TEST_CASE("training is deterministic and a resumed run matches an uninterrupted one") {
  const auto scene = small_room();
  const fs::path a_dir = fresh_dir("full");
  Trainer full({scene}, small_setup(60), 7, a_dir);
  full.run();
  CHECK(full.step() == 60);
  CHECK(full.episode_returns().size() == 2);

  const fs::path b_dir = fresh_dir("again");
  Trainer again({scene}, small_setup(60), 7, b_dir);
  again.run();
  CHECK(again.net().params() == full.net().params());

  const fs::path c_dir = fresh_dir("resumed");
  Trainer resumed({scene}, small_setup(60), 7, c_dir);
  resumed.resume(a_dir / "checkpoints" / "step_000000030");
  CHECK(resumed.step() == 30);
  resumed.run();
  CHECK(resumed.step() == 60);
  CHECK(resumed.net().params() == full.net().params());
  CHECK(resumed.critic().params() == full.critic().params());
  CHECK(resumed.episode_returns() == full.episode_returns());

  std::ifstream curve(a_dir / "learning_curve.csv");
  std::string header;
  std::getline(curve, header);
  CHECK(header == "step,episodes,mean_return,heldout_ape,sigma,lr");
  for (const auto& d : {a_dir, b_dir, c_dir}) fs::remove_all(d);
}

TEST_CASE("sigma and learning rate anneal linearly") {
  Trainer t({small_room()}, small_setup(1000), 1, fresh_dir("sched"));
  CHECK(t.sigma_at(0) == doctest::Approx(0.5));
  CHECK(t.sigma_at(500) == doctest::Approx(0.275));
  CHECK(t.sigma_at(1000) == doctest::Approx(0.05));
  CHECK(t.lr_at(0) == doctest::Approx(3e-4));
  CHECK(t.lr_at(500) == doctest::Approx(1.5e-4));
  fs::remove_all(fresh_dir("sched"));
}
