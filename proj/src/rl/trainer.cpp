#include "aeos/rl/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>

#include <nlohmann/json.hpp>

#include "aeos/common/error.hpp"
#include "aeos/costnet/checkpoint.hpp"
#include "aeos/odometry/metrics.hpp"

namespace aeos {
namespace fs = std::filesystem;

void TrainConfig::validate() const {
  if (total_steps < 0) throw ConfigError("train: total steps must be >= 0");
  if (!(episode_seconds > 0.0)) throw ConfigError("train: episode length must be > 0");
  if (!(train_split > 0.0 && train_split < 1.0)) throw ConfigError("train: split must be in (0, 1)");
  if (rollout_steps < 1) throw ConfigError("train: rollout steps must be >= 1");
  if (!(sigma_start > 0.0) || !(sigma_end > 0.0)) throw ConfigError("train: sigma must be > 0");
  if (!(learning_rate > 0.0)) throw ConfigError("train: learning rate must be > 0");
  if (!(reward_scale > 0.0)) throw ConfigError("train: reward scale must be > 0");
  if (checkpoint_every < 1) throw ConfigError("train: checkpoint interval must be >= 1");
  if (!(eval_seconds > 0.0)) throw ConfigError("train: evaluation length must be > 0");
  ppo.validate();
}

namespace {

nlohmann::json net_config_json(const CostNetConfig& c) {
  return {{"pano_width", c.pano_width},       {"pano_height", c.pano_height},
          {"horizon", c.horizon},             {"hidden", c.hidden},
          {"per_step", c.per_step},           {"q_min", c.bounds.q_min},
          {"q_max", c.bounds.q_max},          {"linear_bound", c.bounds.linear_bound},
          {"centered", c.bounds.centered},    {"q_bias_init", c.q_bias_init},
          {"seed", c.seed}};
}

CostNetConfig net_config_from_json(const nlohmann::json& j) {
  CostNetConfig c;
  try {
    c.pano_width = j.at("pano_width").get<int>();
    c.pano_height = j.at("pano_height").get<int>();
    c.horizon = j.at("horizon").get<int>();
    c.hidden = j.at("hidden").get<int>();
    c.per_step = j.at("per_step").get<bool>();
    c.bounds.q_min = j.at("q_min").get<double>();
    c.bounds.q_max = j.at("q_max").get<double>();
    c.bounds.linear_bound = j.at("linear_bound").get<double>();
    c.bounds.centered = j.at("centered").get<bool>();
    c.q_bias_init = j.at("q_bias_init").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: bad network description: ") + e.what());
  }
  return c;
}

void round_in_place(std::vector<double>& v) { round_to_f32(v); }

}  // namespace

Trainer::Trainer(std::vector<std::shared_ptr<const Scene>> scenes, const TrainSetup& setup,
                 std::uint64_t seed, fs::path out_dir)
    : scenes_(std::move(scenes)),
      setup_(setup),
      seed_(seed),
      out_dir_(std::move(out_dir)),
      net_([&] {
        CostNetConfig c = setup.net;
        c.seed = seed;
        return c;
      }()),
      critic_(static_cast<int>(PolicyObservation::kScalarFeatures) +
                  setup.net.pano_width * setup.net.pano_height,
              setup.policy.mpc.omega_max, [&] {
                CriticConfig c = setup.critic;
                c.seed = seed ^ 0x5DEECE66DULL;
                return c;
              }()),
      policy_(&net_, [&] {
        PolicyConfig p = setup.policy;
        p.use_learned = true;
        return p;
      }()),
      actor_opt_(net_.param_count()),
      critic_opt_(critic_.param_count()),
      rng_(seed) {
  setup_.train.validate();
  setup_.env.validate();
  if (scenes_.empty()) throw ConfigError("train: no scenes");
  if (setup_.net.pano_width != setup_.env.policy_pano_width ||
      setup_.net.pano_height != setup_.env.policy_pano_height) {
    throw ConfigError("train: network and environment pano sizes differ");
  }
  if (setup_.policy.mpc.omega_max != setup_.env.scanner.omega_max) {
    throw ConfigError("train: MPC and scanner rate limits differ");
  }
  fs::create_directories(out_dir_ / "checkpoints");
}

double Trainer::sigma_at(long step) const {
  const auto& t = setup_.train;
  const double f = t.total_steps > 0 ? std::clamp(static_cast<double>(step) / static_cast<double>(t.total_steps), 0.0, 1.0) : 1.0;
  return t.sigma_start + (t.sigma_end - t.sigma_start) * f;
}

double Trainer::lr_at(long step) const {
  const auto& t = setup_.train;
  if (t.total_steps <= 0) return 0.0;
  const double f = std::clamp(static_cast<double>(step) / static_cast<double>(t.total_steps), 0.0, 1.0);
  return t.learning_rate * (1.0 - f);
}

fs::path Trainer::checkpoint_stem(long step) const {
  std::ostringstream name;
  name << "step_" << std::setw(9) << std::setfill('0') << step;
  return out_dir_ / "checkpoints" / name.str();
}

void Trainer::log_scalar(const char* tag, double value) {
  if (!scalar_file_.is_open()) return;
  nlohmann::json j = {{"step", step_}, {"tag", tag}, {"value", std::isfinite(value) ? nlohmann::json(value) : nlohmann::json()}};
  scalar_file_ << j.dump() << '\n';
}

void Trainer::write_curve_row(const CurvePoint& p) {
  curve_.push_back(p);
  if (!curve_file_.is_open()) return;
  curve_file_ << p.step << ',' << p.episodes << ',' << std::setprecision(10) << p.mean_return << ',';
  if (p.heldout_ape) curve_file_ << *p.heldout_ape;
  curve_file_ << ',' << p.sigma << ',' << p.lr << '\n';
  curve_file_.flush();
}

std::vector<Transition> Trainer::collect(long budget) {
  const TrainConfig& tc = setup_.train;
  std::vector<Transition> batch;
  const double sigma = sigma_at(step_);
  while (static_cast<long>(batch.size()) < std::min<long>(tc.rollout_steps, budget)) {
    const auto& scene = scenes_[static_cast<std::size_t>(episodes_) % scenes_.size()];
    const Trajectory& traj = scene->trajectory;
    const double latest = traj.t_first() + tc.train_split * traj.duration() - tc.episode_seconds;
    const double start = latest > traj.t_first() ? rng_.uniform(traj.t_first(), latest) : traj.t_first();
    const std::uint64_t env_seed = rng_.fork_seed();
    const double theta0 = rng_.uniform(0.0, 2.0 * std::numbers::pi);
    ScanEnv env(scene, setup_.env);
    env.reset(start, tc.episode_seconds, env_seed, theta0);
    const long remaining = budget - static_cast<long>(batch.size());
    const bool complete = env.episode_ticks(start, tc.episode_seconds) <= remaining;
    double episode_return = 0.0;
    while (!env.done() && static_cast<long>(batch.size()) < budget) {
      Transition tr;
      tr.obs = env.observation();
      tr.features = tr.obs.policy.features();
      const PolicyDecision dec = policy_.decide(net_.params(), tr.obs);
      tr.mean = dec.omega;
      tr.value = critic_.value(tr.features, tr.mean);
      tr.action = tr.mean + sigma * rng_.normal();
      tr.log_prob = gaussian_log_prob(tr.action, tr.mean, sigma);
      const EnvStep st = env.step(tr.action);
      episode_return += st.reward.total;
      tr.reward = tc.reward_scale * st.reward.total;
      if (st.done || static_cast<long>(batch.size()) + 1 >= budget) {
        // Time-limit truncation: bootstrap from the state that follows.
        tr.episode_end = true;
        const EnvObservation& next = env.observation();
        tr.bootstrap = critic_.value(next.policy.features(), policy_.decide(net_.params(), next).omega);
      }
      batch.push_back(std::move(tr));
    }
    ++episodes_;
    if (complete) {
      episode_returns_.push_back(episode_return);
      log_scalar("train/episode_return", episode_return);
    }
  }
  return batch;
}

double Trainer::evaluate_heldout() {
  const auto& scene = scenes_.front();
  const Trajectory& traj = scene->trajectory;
  const double start = traj.t_first() + setup_.train.train_split * traj.duration();
  ScanEnv env(scene, setup_.env);
  env.reset(start, setup_.train.eval_seconds, seed_ ^ 0xE7A1ULL);
  while (!env.done()) env.step(policy_.decide(net_.params(), env.observation()).omega);
  return compute_ape(env.estimate_trajectory(), env.truth_trajectory());
}

void Trainer::run() {
  const TrainConfig& tc = setup_.train;
  const bool fresh = step_ == 0;
  curve_file_.open(out_dir_ / "learning_curve.csv", fresh ? std::ios::trunc : std::ios::app);
  scalar_file_.open(out_dir_ / "scalars.ndjson", fresh ? std::ios::trunc : std::ios::app);
  if (!curve_file_ || !scalar_file_) throw IoError("train: cannot open output files in " + out_dir_.string());
  if (fresh) {
    curve_file_ << "step,episodes,mean_return,heldout_ape,sigma,lr\n";
    save(checkpoint_stem(0));
  }
  long next_checkpoint = (step_ / tc.checkpoint_every + 1) * tc.checkpoint_every;
  while (step_ < tc.total_steps) {
    const double sigma = sigma_at(step_);
    const double lr = lr_at(step_);
    const std::size_t returns_before = episode_returns_.size();
    const auto batch = collect(tc.total_steps - step_);
    if (batch.empty()) break;
    Learner learner{net_, critic_, actor_opt_, critic_opt_};
    const PpoStats stats = ppo_update(policy_, learner, batch, sigma, lr, tc.ppo, rng_);
    step_ += static_cast<long>(batch.size());

    log_scalar("ppo/epochs", stats.epochs);
    log_scalar("ppo/approx_kl", stats.approx_kl);
    log_scalar("ppo/policy_loss", stats.policy_loss);
    log_scalar("ppo/value_loss", stats.value_loss);
    log_scalar("ppo/actor_grad_norm", stats.actor_grad_norm);
    log_scalar("ppo/clip_fraction", stats.clip_fraction);
    log_scalar("ppo/clamped_fraction", stats.clamped_fraction);
    log_scalar("ppo/rejected", stats.rejected ? 1.0 : 0.0);

    CurvePoint p;
    p.step = step_;
    p.episodes = episodes_;
    double sum = 0.0;
    for (std::size_t i = returns_before; i < episode_returns_.size(); ++i) sum += episode_returns_[i];
    const std::size_t new_returns = episode_returns_.size() - returns_before;
    p.mean_return = new_returns > 0 ? sum / static_cast<double>(new_returns) : std::numeric_limits<double>::quiet_NaN();
    p.sigma = sigma;
    p.lr = lr;
    if (step_ >= next_checkpoint || step_ >= tc.total_steps) {
      if (tc.evaluate) {
        p.heldout_ape = evaluate_heldout();
        log_scalar("eval/heldout_ape", *p.heldout_ape);
      }
      save(checkpoint_stem(step_));
      while (next_checkpoint <= step_) next_checkpoint += tc.checkpoint_every;
    }
    write_curve_row(p);
  }
  save(out_dir_ / "final");
  curve_file_.close();
  scalar_file_.close();
}

void Trainer::save(const fs::path& stem) {
  // Rounding the live state to float32 makes a resumed run continue exactly
  // as an uninterrupted one would.
  round_in_place(net_.params());
  round_in_place(critic_.params());
  round_in_place(actor_opt_.first_moment());
  round_in_place(actor_opt_.second_moment());
  round_in_place(critic_opt_.first_moment());
  round_in_place(critic_opt_.second_moment());

  std::vector<double> values;
  auto append = [&](const std::vector<double>& v) { values.insert(values.end(), v.begin(), v.end()); };
  append(net_.params());
  append(critic_.params());
  append(actor_opt_.first_moment());
  append(actor_opt_.second_moment());
  append(critic_opt_.first_moment());
  append(critic_opt_.second_moment());

  nlohmann::json meta = {
      {"format", "aeos-policy"},
      {"step", step_},
      {"episodes", episodes_},
      {"seed", seed_},
      {"rng", rng_.serialize()},
      {"costnet", net_config_json(net_.config())},
      {"critic_hidden", setup_.critic.hidden},
      {"layout",
       {{"costnet", net_.param_count()},
        {"critic", critic_.param_count()},
        {"actor_adam", 2 * actor_opt_.size()},
        {"critic_adam", 2 * critic_opt_.size()}}},
      {"actor_adam_steps", actor_opt_.steps()},
      {"critic_adam_steps", critic_opt_.steps()},
      {"episode_returns", episode_returns_},
  };
  save_checkpoint(stem, values, meta);
}

void Trainer::resume(const fs::path& stem) {
  const Checkpoint ck = load_checkpoint(stem);
  const auto& m = ck.metadata;
  try {
    if (m.at("format").get<std::string>() != "aeos-policy") throw IoError("resume: not a training checkpoint");
    const CostNetConfig stored = net_config_from_json(m.at("costnet"));
    if (stored.pano_width != net_.config().pano_width || stored.pano_height != net_.config().pano_height ||
        stored.horizon != net_.config().horizon || stored.hidden != net_.config().hidden ||
        stored.per_step != net_.config().per_step) {
      throw ConfigError("resume: checkpoint network differs from the configured one");
    }
    const std::size_t n_net = net_.param_count(), n_critic = critic_.param_count();
    if (m.at("layout").at("costnet").get<std::size_t>() != n_net ||
        m.at("layout").at("critic").get<std::size_t>() != n_critic ||
        ck.values.size() != 3 * n_net + 3 * n_critic) {
      throw ConfigError("resume: checkpoint layout differs from the configured networks");
    }
    auto it = ck.values.begin();
    auto take = [&](std::vector<double>& dst, std::size_t n) {
      std::copy(it, it + static_cast<std::ptrdiff_t>(n), dst.begin());
      it += static_cast<std::ptrdiff_t>(n);
    };
    take(net_.params(), n_net);
    take(critic_.params(), n_critic);
    take(actor_opt_.first_moment(), n_net);
    take(actor_opt_.second_moment(), n_net);
    take(critic_opt_.first_moment(), n_critic);
    take(critic_opt_.second_moment(), n_critic);
    actor_opt_.set_steps(m.at("actor_adam_steps").get<std::uint64_t>());
    critic_opt_.set_steps(m.at("critic_adam_steps").get<std::uint64_t>());
    step_ = m.at("step").get<long>();
    episodes_ = m.at("episodes").get<int>();
    rng_.deserialize(m.at("rng").get<std::string>());
    episode_returns_ = m.at("episode_returns").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("resume: malformed checkpoint metadata: ") + e.what());
  }
}

LoadedPolicy load_policy_checkpoint(const fs::path& stem) {
  const Checkpoint ck = load_checkpoint(stem);
  LoadedPolicy out;
  try {
    out.net = net_config_from_json(ck.metadata.at("costnet"));
    const auto n = ck.metadata.at("layout").at("costnet").get<std::size_t>();
    if (n > ck.values.size()) throw IoError("checkpoint: layout exceeds stored values");
    out.params.assign(ck.values.begin(), ck.values.begin() + static_cast<std::ptrdiff_t>(n));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("checkpoint: malformed metadata: ") + e.what());
  }
  const CostNet probe(out.net);
  if (probe.param_count() != out.params.size()) {
    throw IoError("checkpoint: parameter count does not match the stored network description");
  }
  return out;
}

}  // namespace aeos
