#include "aeos/harness/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include "aeos/common/error.hpp"

namespace aeos {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

struct Binding {
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

double parse_double(const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError("expected a number, got '" + v + "'");
  return out;
}

long long parse_int(const std::string& v) {
  long long out = 0;
  const auto* end = v.data() + v.size();
  const auto res = std::from_chars(v.data(), end, out);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError("expected an integer, got '" + v + "'");
  return out;
}

bool parse_bool(const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("expected true or false, got '" + v + "'");
}

std::string parse_string(const std::string& v) {
  if (v.size() < 2 || v.front() != '"' || v.back() != '"') {
    throw ConfigError("expected a quoted string, got '" + v + "'");
  }
  return v.substr(1, v.size() - 2);
}

std::vector<std::string> parse_list(const std::string& v) {
  if (v.size() < 2 || v.front() != '[' || v.back() != ']') {
    throw ConfigError("expected a [list], got '" + v + "'");
  }
  std::vector<std::string> out;
  std::string body = trim(std::string_view(v).substr(1, v.size() - 2));
  if (body.empty()) return out;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_string(trim(item)));
  return out;
}

using Table = std::map<std::string, std::map<std::string, Binding>>;

Binding bind(double& x) {
  return {[&x](const std::string& v) { x = parse_double(v); }, [&x] { return format_double(x); }};
}
Binding bind_deg(double& x) {
  return {[&x](const std::string& v) { x = parse_double(v) * kDeg; },
          [&x] { return format_double(x / kDeg); }};
}
template <typename I>
Binding bind_int(I& x) {
  return {[&x](const std::string& v) {
            const long long n = parse_int(v);
            if constexpr (std::is_unsigned_v<I>) {
              if (n < 0) throw ConfigError("expected a non-negative integer, got '" + v + "'");
            }
            x = static_cast<I>(n);
          },
          [&x] { return std::to_string(x); }};
}
Binding bind(bool& x) {
  return {[&x](const std::string& v) { x = parse_bool(v); }, [&x] { return std::string(x ? "true" : "false"); }};
}
Binding bind(std::string& x) {
  return {[&x](const std::string& v) { x = parse_string(v); }, [&x] { return "\"" + x + "\""; }};
}
Binding bind(std::vector<std::string>& x) {
  return {[&x](const std::string& v) { x = parse_list(v); },
          [&x] {
            std::string s = "[";
            for (std::size_t i = 0; i < x.size(); ++i) s += (i ? ", \"" : "\"") + x[i] + "\"";
            return s + "]";
          }};
}
template <typename E>
Binding bind_enum(E& x, std::vector<std::pair<std::string, E>> names) {
  return {[&x, names](const std::string& v) {
            const std::string s = parse_string(v);
            for (const auto& [n, e] : names) {
              if (n == s) {
                x = e;
                return;
              }
            }
            throw ConfigError("unknown option '" + s + "'");
          },
          [&x, names] {
            for (const auto& [n, e] : names) {
              if (e == x) return "\"" + n + "\"";
            }
            return std::string("\"?\"");
          }};
}

Table make_table(AppConfig& c) {
  Table t;
  auto& sc = t["scene"];
  sc["seed"] = bind_int(c.scene_seed);
  sc["pitch"] = bind(c.scene.pitch);
  sc["speed"] = bind(c.scene.speed);
  sc["pose_dt"] = bind(c.scene.pose_dt);
  sc["flight_height"] = bind(c.scene.flight_height);
  sc["duration"] = bind(c.scene.duration);
  sc["tunnel_length"] = bind(c.scene.tunnel_length);
  sc["tunnel_width"] = bind(c.scene.tunnel_width);
  sc["tunnel_height"] = bind(c.scene.tunnel_height);
  sc["pillar_spacing"] = bind(c.scene.pillar_spacing);
  sc["texture_amplitude"] = bind(c.scene.texture_amplitude);
  sc["room_size"] = bind(c.scene.room_size);
  sc["room_height"] = bind(c.scene.room_height);
  sc["lap_radius"] = bind(c.scene.lap_radius);
  sc["clutter_boxes"] = bind_int(c.scene.clutter_boxes);
  sc["forest_extent"] = bind(c.scene.forest_extent);
  sc["forest_density"] = bind(c.scene.forest_density);
  sc["forest_path_radius"] = bind(c.scene.forest_path_radius);
  sc["index_cell"] = bind(c.scene.map.index_cell);
  sc["hit_radius_factor"] = bind(c.scene.map.hit_radius_factor);
  sc["ray_cell"] = bind(c.scene.map.ray_cell);

  auto& se = t["sensor"];
  se["fov_h_deg"] = bind_deg(c.env.sensor.fov_h);
  se["fov_v_deg"] = bind_deg(c.env.sensor.fov_v);
  se["n_az"] = bind_int(c.env.sensor.n_az);
  se["n_el"] = bind_int(c.env.sensor.n_el);
  se["max_range"] = bind(c.env.sensor.max_range);
  se["range_sigma"] = bind(c.env.sensor.range_sigma);

  auto& sn = t["scanner"];
  sn["omega_max"] = bind(c.env.scanner.omega_max);
  sn["delay_steps"] = bind_int(c.env.scanner.delay_steps);

  auto& en = t["env"];
  en["dt"] = bind(c.env.dt);
  en["coverage_voxel"] = bind(c.env.coverage_voxel);
  en["rte_window"] = bind(c.env.rte_window);
  en["prior_rotation_sigma"] = bind(c.env.prior_rotation_sigma);
  en["prior_translation_sigma"] = bind(c.env.prior_translation_sigma);

  auto& od = t["odometry"];
  od["map_window"] = bind(c.env.odometry.map.window);
  od["map_voxel"] = bind(c.env.odometry.map.voxel);
  od["max_match_dist"] = bind(c.env.odometry.map.max_match_dist);
  od["normal_k"] = bind_int(c.env.odometry.map.normal_k);
  od["normal_radius"] = bind(c.env.odometry.map.normal_radius);
  od["planarity"] = bind(c.env.odometry.map.planarity);
  od["plane_tolerance"] = bind(c.env.odometry.map.plane_tolerance);
  od["max_iterations"] = bind_int(c.env.odometry.registration.max_iterations);
  od["tolerance"] = bind(c.env.odometry.registration.tolerance);
  od["huber"] = bind(c.env.odometry.registration.huber);
  od["min_correspondences"] = bind_int(c.env.odometry.registration.min_correspondences);
  od["measurement_sigma"] = bind(c.env.odometry.registration.measurement_sigma);
  od["degenerate_inflation"] = bind(c.env.odometry.degenerate_inflation);
  od["process_noise_rotation"] = bind(c.env.odometry.process_noise[0]);
  od["process_noise_translation"] = bind(c.env.odometry.process_noise[3]);

  auto& un = t["uncertainty"];
  un["pano_width"] = bind_int(c.env.uncertainty.pano_width);
  un["pano_height"] = bind_int(c.env.uncertainty.pano_height);
  un["dtheta_deg"] = bind_deg(c.env.uncertainty.dtheta);
  un["damping"] = bind(c.env.uncertainty.damping);

  auto& rw = t["reward"];
  rw["exploration_weight"] = bind(c.env.reward.exploration);
  rw["odometry_weight"] = bind(c.env.reward.odometry);
  rw["rte_floor"] = bind(c.env.reward.rte_floor);

  auto& cn = t["costnet"];
  cn["pano_width"] = bind_int(c.net.pano_width);
  cn["pano_height"] = bind_int(c.net.pano_height);
  cn["hidden"] = bind_int(c.net.hidden);
  cn["per_step"] = bind(c.net.per_step);
  cn["q_min"] = bind(c.net.bounds.q_min);
  cn["q_max"] = bind(c.net.bounds.q_max);
  cn["linear_bound"] = bind(c.net.bounds.linear_bound);
  cn["centered"] = bind(c.net.bounds.centered);
  cn["q_bias_init"] = bind(c.net.q_bias_init);

  auto& mp = t["mpc"];
  mp["horizon"] = bind_int(c.policy.mpc.horizon);
  mp["rho"] = bind(c.policy.mpc.rho);
  mp["unc_weight"] = bind(c.policy.mpc.unc_weight);
  mp["relaxation"] = bind(c.policy.mpc.relaxation);
  mp["max_iterations"] = bind_int(c.policy.mpc.max_iterations);
  mp["tolerance"] = bind(c.policy.mpc.tolerance);
  mp["solver"] = bind_enum(c.policy.mpc.solver, {{"semi-implicit", MpcSolver::kSemiImplicit},
                                                  {"fixed-point", MpcSolver::kFixedPoint}});

  auto& cr = t["critic"];
  cr["hidden"] = bind_int(c.critic.hidden);

  auto& tr = t["train"];
  tr["total_steps"] = bind_int(c.train.total_steps);
  tr["episode_seconds"] = bind(c.train.episode_seconds);
  tr["train_split"] = bind(c.train.train_split);
  tr["rollout_steps"] = bind_int(c.train.rollout_steps);
  tr["sigma_start"] = bind(c.train.sigma_start);
  tr["sigma_end"] = bind(c.train.sigma_end);
  tr["learning_rate"] = bind(c.train.learning_rate);
  tr["reward_scale"] = bind(c.train.reward_scale);
  tr["checkpoint_every"] = bind_int(c.train.checkpoint_every);
  tr["evaluate"] = bind(c.train.evaluate);
  tr["eval_seconds"] = bind(c.train.eval_seconds);
  tr["gamma"] = bind(c.train.ppo.gamma);
  tr["gae_lambda"] = bind(c.train.ppo.gae_lambda);
  tr["clip"] = bind(c.train.ppo.clip);
  tr["grad_clip"] = bind(c.train.ppo.grad_clip);
  tr["kl_stop"] = bind(c.train.ppo.kl_stop);
  tr["epochs"] = bind_int(c.train.ppo.epochs);
  tr["minibatch"] = bind_int(c.train.ppo.minibatch);
  tr["normalize_advantages"] = bind(c.train.ppo.normalize_advantages);
  tr["critic_lr_scale"] = bind(c.train.ppo.critic_lr_scale);
  tr["objective"] = bind_enum(c.train.ppo.objective,
                              {{"ppo", ActorObjective::kClippedSurrogate},
                               {"critic", ActorObjective::kCriticAscent}});

  auto& bm = t["benchmark"];
  bm["scenes"] = bind(c.benchmark.scenes);
  bm["controllers"] = bind(c.benchmark.controllers);
  bm["seeds"] = bind_int(c.benchmark.seeds);
  bm["first_seed"] = bind_int(c.benchmark.first_seed);
  bm["episode_seconds"] = bind(c.benchmark.episode_seconds);
  bm["start_fraction"] = bind(c.benchmark.start_fraction);
  bm["checkpoint"] = bind(c.benchmark.checkpoint);
  bm["threads"] = bind_int(c.benchmark.threads);

  auto& ap = t["ape"];
  ap["align"] = bind(c.ape.align);
  ap["match_tolerance"] = bind(c.ape.match_tolerance);
  return t;
}

}  // namespace

void AppConfig::finalize() {
  // Single sources for values several modules need.
  policy.mpc.omega_max = env.scanner.omega_max;
  policy.mpc.dt = env.dt;
  policy.mpc.centered = net.bounds.centered;
  net.horizon = policy.mpc.horizon;
  env.policy_pano_width = net.pano_width;
  env.policy_pano_height = net.pano_height;
  env.odometry.process_noise.head<3>().setConstant(env.odometry.process_noise[0]);
  env.odometry.process_noise.tail<3>().setConstant(env.odometry.process_noise[3]);
  scene.map.sample_pitch = scene.pitch;

  env.validate();
  policy.mpc.validate();
  train.validate();
  if (net.pano_width < 1 || net.pano_height < 1 || net.hidden < 1) throw ConfigError("costnet: sizes must be positive");
  if (!(net.bounds.q_min > 0.0 && net.bounds.q_min < net.bounds.q_max)) throw ConfigError("costnet: need 0 < q_min < q_max");
  if (!(net.bounds.linear_bound > 0.0)) throw ConfigError("costnet: linear bound must be > 0");
  if (critic.hidden < 1) throw ConfigError("critic: hidden must be >= 1");
  if (benchmark.seeds < 1) throw ConfigError("benchmark: seeds must be >= 1");
  if (!(benchmark.episode_seconds > 0.0)) throw ConfigError("benchmark: episode length must be > 0");
  if (!(benchmark.start_fraction >= 0.0 && benchmark.start_fraction < 1.0)) {
    throw ConfigError("benchmark: start fraction must be in [0, 1)");
  }
  if (benchmark.threads < 0) throw ConfigError("benchmark: threads must be >= 0");
  if (!(ape.match_tolerance > 0.0)) throw ConfigError("ape: match tolerance must be > 0");
  if (!(scene.pitch > 0.0) || !(scene.speed > 0.0) || !(scene.pose_dt > 0.0)) {
    throw ConfigError("scene: pitch, speed and pose_dt must be > 0");
  }
}

AppConfig parse_config(const std::string& text) {
  AppConfig cfg;
  Table table = make_table(cfg);
  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    // Strip comments outside quotes.
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"') quoted = !quoted;
      if (line[i] == '#' && !quoted) {
        line.resize(i);
        break;
      }
    }
    const std::string s = trim(line);
    if (s.empty()) continue;
    const std::string where = "config line " + std::to_string(lineno) + ": ";
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(where + "unterminated section header");
      section = trim(std::string_view(s).substr(1, s.size() - 2));
      if (!table.contains(section)) throw ConfigError(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(where + "expected key = value");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    const std::string value = trim(std::string_view(s).substr(eq + 1));
    if (section.empty()) throw ConfigError(where + "key outside any section");
    auto& keys = table[section];
    const auto it = keys.find(key);
    if (it == keys.end()) throw ConfigError(where + "unknown key '" + key + "' in [" + section + "]");
    try {
      it->second.set(value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + section + "." + key + ": " + e.what());
    }
  }
  cfg.finalize();
  return cfg;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

std::string default_config_text() {
  AppConfig cfg;
  cfg.finalize();
  Table table = make_table(cfg);
  std::ostringstream out;
  out << "# Default configuration. Every key is optional.\n";
  for (const char* section : {"scene", "sensor", "scanner", "env", "odometry", "uncertainty", "reward",
                              "costnet", "mpc", "critic", "train", "benchmark", "ape"}) {
    out << "\n[" << section << "]\n";
    for (const auto& [key, b] : table[section]) out << key << " = " << b.get() << '\n';
  }
  return out.str();
}

}  // namespace aeos
