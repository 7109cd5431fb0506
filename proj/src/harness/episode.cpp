#include "aeos/harness/episode.hpp"

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "aeos/common/error.hpp"
#include "aeos/geometry/ply.hpp"
#include "aeos/odometry/metrics.hpp"

namespace aeos {
namespace fs = std::filesystem;

std::shared_ptr<const Scene> resolve_scene(const std::string& spec, const AppConfig& config) {
  const auto plus = spec.find('+');
  if (plus == std::string::npos) {
    SceneKind kind;
    try {
      kind = parse_scene_kind(spec);
    } catch (const Error&) {
      throw ConfigError("unknown scene '" + spec + "' (tunnel, room, forest or map.ply+trajectory.tum)");
    }
    return std::make_shared<const Scene>(generate_synthetic_scene(kind, config.scene_seed, config.scene));
  }
  const fs::path ply = spec.substr(0, plus);
  const fs::path tum = spec.substr(plus + 1);
  const PlyPoints raw = read_ply(ply);
  PointCloud cloud(Frame::kWorld, raw.points);
  WorldMapOptions opts = config.scene.map;
  auto scene = std::make_shared<Scene>(Scene{
      ply.stem().string(),
      raw.normals.size() == raw.points.size() && !raw.normals.empty()
          ? WorldMap(cloud, raw.normals, opts)
          : WorldMap::with_estimated_normals(cloud, opts),
      load_tum(tum)});
  return scene;
}

std::uint64_t hash_samples(const UncertaintySamples& samples) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 1099511628211ULL;
    }
  };
  mix(&samples.theta0, sizeof(double));
  mix(&samples.dtheta, sizeof(double));
  if (!samples.values.empty()) mix(samples.values.data(), samples.values.size() * sizeof(double));
  return h;
}

EpisodeLog run_episode(std::shared_ptr<const Scene> scene, const std::string& scene_name,
                       const ControllerSpec& spec, Controller& controller, std::uint64_t seed,
                       const AppConfig& config, const EpisodeOptions& options) {
  EpisodeLog log;
  log.scene = scene_name;
  log.controller = spec.label();
  log.seed = seed;
  ScanEnv env(scene, config.env);
  const double start = scene->trajectory.t_first() + options.start;
  env.reset(start, options.duration, seed, options.theta0);
  controller.reset(seed);
  double exploration_sum = 0.0;
  while (!env.done() && (!options.max_steps || static_cast<int>(log.steps.size()) < *options.max_steps)) {
    const EnvObservation& obs = env.observation();
    EpisodeStepLog s;
    s.uncertainty_hash = hash_samples(obs.uncertainty);
    const auto t0 = std::chrono::steady_clock::now();
    const ControlDecision d = controller.decide(obs);
    s.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    s.omega_cmd = d.omega;
    s.mpc_residual = d.mpc_residual;
    s.mpc_converged = d.converged;
    const EnvStep st = env.step(d.omega);
    s.time = env.observation().time;
    s.theta = env.scanner().theta;
    s.omega = st.applied_omega;
    s.reward = st.reward;
    s.rte = st.rte;
    s.status = st.status;
    s.estimate = env.estimate_trajectory().poses().back().pose;
    s.truth = env.truth_trajectory().poses().back().pose;
    exploration_sum += st.reward.exploration;
    log.steps.push_back(s);
  }
  log.estimate = env.estimate_trajectory();
  log.truth = env.truth_trajectory();
  log.degenerate_steps = env.degenerate_steps();
  log.mean_exploration = log.steps.empty() ? 0.0 : exploration_sum / static_cast<double>(log.steps.size());
  if (log.steps.size() >= 1) {
    log.ape = compute_ape(log.estimate, log.truth, config.ape);
  }
  if (2 * log.degenerate_steps > static_cast<int>(log.steps.size())) {
    log.failed = true;
    log.failure = "odometry degenerate on " + std::to_string(log.degenerate_steps) + " of " +
                  std::to_string(log.steps.size()) + " steps";
  }
  return log;
}

namespace {

const char* status_name(UpdateStatus s) {
  switch (s) {
    case UpdateStatus::kBootstrap: return "bootstrap";
    case UpdateStatus::kRegistered: return "registered";
    case UpdateStatus::kDegenerate: return "degenerate";
  }
  return "?";
}

UpdateStatus parse_status(const std::string& s) {
  if (s == "bootstrap") return UpdateStatus::kBootstrap;
  if (s == "registered") return UpdateStatus::kRegistered;
  if (s == "degenerate") return UpdateStatus::kDegenerate;
  throw IoError("episode csv: unknown status '" + s + "'");
}

constexpr const char* kEpisodeHeader =
    "t,theta,omega_cmd,omega,r_exp,r_lio,reward,rte,est_x,est_y,est_z,true_x,true_y,true_z,"
    "u_hash,mpc_residual,mpc_converged,status";

}  // namespace

void write_episode(const fs::path& stem, const EpisodeLog& log) {
  if (stem.has_parent_path()) fs::create_directories(stem.parent_path());
  std::ofstream f(stem.string() + ".csv");
  if (!f) throw IoError("cannot write " + stem.string() + ".csv");
  f << kEpisodeHeader << '\n' << std::setprecision(12);
  for (const auto& s : log.steps) {
    const auto& e = s.estimate.translation();
    const auto& t = s.truth.translation();
    f << s.time << ',' << s.theta << ',' << s.omega_cmd << ',' << s.omega << ',' << s.reward.exploration << ','
      << s.reward.odometry << ',' << s.reward.total << ',' << s.rte << ',' << e.x() << ',' << e.y() << ','
      << e.z() << ',' << t.x() << ',' << t.y() << ',' << t.z() << ',' << std::hex << s.uncertainty_hash
      << std::dec << ',';
    if (s.mpc_residual) f << *s.mpc_residual;
    f << ',' << (s.mpc_converged ? 1 : 0) << ',' << status_name(s.status) << '\n';
  }
  save_tum(stem.string() + "_estimate.tum", log.estimate);
  save_tum(stem.string() + "_truth.tum", log.truth);
}

EpisodeLog read_episode_csv(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kEpisodeHeader) throw IoError(path.string() + ": not an episode CSV");
  EpisodeLog log;
  log.scene = path.stem().string();
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    if (line.back() == ',') cols.emplace_back();
    if (cols.size() != 18) throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 18 columns");
    try {
      EpisodeStepLog s;
      s.time = std::stod(cols[0]);
      s.theta = std::stod(cols[1]);
      s.omega_cmd = std::stod(cols[2]);
      s.omega = std::stod(cols[3]);
      s.reward.exploration = std::stod(cols[4]);
      s.reward.odometry = std::stod(cols[5]);
      s.reward.total = std::stod(cols[6]);
      s.rte = std::stod(cols[7]);
      s.estimate = Pose(Eigen::Matrix3d::Identity(), {std::stod(cols[8]), std::stod(cols[9]), std::stod(cols[10])});
      s.truth = Pose(Eigen::Matrix3d::Identity(), {std::stod(cols[11]), std::stod(cols[12]), std::stod(cols[13])});
      s.uncertainty_hash = std::stoull(cols[14], nullptr, 16);
      if (!cols[15].empty()) s.mpc_residual = std::stod(cols[15]);
      s.mpc_converged = cols[16] == "1";
      s.status = parse_status(cols[17]);
      log.steps.push_back(s);
      log.estimate.push_back(s.time, s.estimate);
      log.truth.push_back(s.time, s.truth);
    } catch (const std::logic_error&) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return log;
}

}  // namespace aeos
