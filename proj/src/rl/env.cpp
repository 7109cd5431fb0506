#include "aeos/rl/env.hpp"

#include <algorithm>
#include <cmath>

#include "aeos/common/angles.hpp"
#include "aeos/common/error.hpp"
#include "aeos/geometry/pano.hpp"
#include "aeos/odometry/metrics.hpp"
#include "aeos/scansim/raycast.hpp"

namespace aeos {

void EnvConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError("env: dt must be > 0");
  sensor.validate();
  if (!(scanner.omega_max > 0.0)) throw ConfigError("env: omega_max must be > 0");
  if (scanner.delay_steps < 0) throw ConfigError("env: delay must be >= 0");
  if (policy_pano_width < 1 || policy_pano_height < 1) throw ConfigError("env: policy pano size");
  if (uncertainty.pano_width < 1 || uncertainty.pano_height < 1) {
    throw ConfigError("env: uncertainty pano size");
  }
  if (!(coverage_voxel > 0.0)) throw ConfigError("env: coverage voxel must be > 0");
  if (!(rte_window > 0.0)) throw ConfigError("env: rte window must be > 0");
  if (!(reward.rte_floor > 0.0)) throw ConfigError("env: rte floor must be > 0");
  if (!(prior_rotation_sigma >= 0.0) || !(prior_translation_sigma >= 0.0)) {
    throw ConfigError("env: prior noise must be >= 0");
  }
  try {
    (void)sample_count(uncertainty.dtheta);
  } catch (const InputError& e) {
    throw ConfigError(e.what());
  }
}

ScanEnv::ScanEnv(std::shared_ptr<const Scene> scene, const EnvConfig& config)
    : scene_(std::move(scene)), config_(config), coverage_(config.coverage_voxel) {
  if (!scene_) throw InputError("env: null scene");
  config_.validate();
  if (scene_->trajectory.size() < 2) throw InputError("env: scene trajectory too short");
}

int ScanEnv::episode_ticks(double start, double duration) const {
  const double end = std::min(start + duration, scene_->trajectory.t_last());
  return std::max(0, static_cast<int>(std::floor((end - start) / config_.dt + 1e-9)));
}

Pose ScanEnv::lidar_in_world(const Pose& body, double theta) const {
  return body * config_.mount.with_angle(theta).lidar_in_body();
}

const EnvObservation& ScanEnv::reset(double start, double duration, std::uint64_t seed,
                                     double theta0) {
  const Trajectory& traj = scene_->trajectory;
  if (!(start >= traj.t_first()) || !(start < traj.t_last())) {
    throw InputError("env: episode start outside the trajectory");
  }
  if (!(duration >= 0.0)) throw InputError("env: negative episode duration");
  rng_ = Rng(seed);
  start_ = start;
  max_steps_ = episode_ticks(start, duration);
  end_ = start + max_steps_ * config_.dt;
  steps_ = 0;
  degenerate_ = 0;
  done_ = max_steps_ == 0;

  scanner_ = ScannerState{};
  scanner_.theta = wrap_two_pi(theta0);
  scanner_.time = start;
  coverage_ = VoxelCoverage(config_.coverage_voxel);
  estimate_ = Trajectory();
  truth_ = Trajectory();

  const Pose truth = traj.at(start);
  odometry_ = std::make_unique<Odometry>(config_.odometry, truth);
  const PointCloud scan = raycast_scan(scene_->map, config_.sensor,
                                       lidar_in_world(truth, scanner_.theta), &rng_);
  odometry_->update(scan, config_.mount.with_angle(scanner_.theta), truth, start);
  coverage_.update(scan.transformed(lidar_in_world(truth, scanner_.theta), Frame::kWorld));
  estimate_.push_back(start, odometry_->pose());
  truth_.push_back(start, truth);
  last_truth_ = truth;
  last_estimate_ = odometry_->pose();
  obs_ = EnvObservation{};
  observe();
  obs_.policy.velocity.setZero();
  return obs_;
}

void ScanEnv::observe() {
  const Pose& est = odometry_->pose();
  obs_.time = start_ + steps_ * config_.dt;
  obs_.theta = scanner_.theta;
  obs_.estimate = est;

  const Pose world_to_body = est.inverse();
  PointCloud local(Frame::kBody);
  const auto map_points = odometry_->map().points();
  local.reserve(map_points.size());
  for (const auto& p : map_points) local.push_back(world_to_body * p);
  const double range = config_.sensor.max_range;

  const PanoDepthMap policy_pano =
      project_to_pano(local, config_.policy_pano_width, config_.policy_pano_height, range);
  const Eigen::Vector3d velocity =
      est.rotation().transpose() * (est.translation() - last_estimate_.translation()) / config_.dt;
  const Eigen::Vector3d cov_diag = odometry_->covariance().diagonal().tail<3>();
  obs_.policy = PolicyObservation::from_pano(velocity, cov_diag, scanner_.theta, policy_pano);

  const PanoDepthMap pano = project_to_pano(local, config_.uncertainty.pano_width,
                                            config_.uncertainty.pano_height, range);
  obs_.uncertainty = sample_uncertainty(pano, scanner_.theta, config_.sensor, est, config_.uncertainty);
}

EnvStep ScanEnv::step(double omega_cmd) {
  if (done_) throw InputError("env: step after episode end");
  if (!std::isfinite(omega_cmd)) throw InputError("env: non-finite rate command");
  EnvStep out;
  scanner_ = step_scanner(std::move(scanner_), omega_cmd, config_.dt, config_.scanner);
  out.applied_omega = scanner_.omega;
  ++steps_;
  const double t = start_ + steps_ * config_.dt;
  scanner_.time = t;

  const Pose truth = scene_->trajectory.at(std::min(t, scene_->trajectory.t_last()));
  const Pose lidar = lidar_in_world(truth, scanner_.theta);
  const PointCloud scan = raycast_scan(scene_->map, config_.sensor, lidar, &rng_);

  // Motion prior: the true relative motion corrupted by per-tick noise,
  // chained onto the previous estimate.
  const Pose rel = last_truth_.inverse() * truth;
  const Eigen::Vector3d rot_noise(rng_.normal(), rng_.normal(), rng_.normal());
  const Eigen::Vector3d trans_noise(rng_.normal(), rng_.normal(), rng_.normal());
  const Pose noisy_rel(so3_exp(config_.prior_rotation_sigma * rot_noise) * rel.rotation(),
                       rel.translation() + config_.prior_translation_sigma * trans_noise);
  const Pose prior = (last_estimate_ * noisy_rel).normalized();

  const auto update = odometry_->update(scan, config_.mount.with_angle(scanner_.theta), prior, t);
  out.status = update.status;
  if (update.status == UpdateStatus::kDegenerate) ++degenerate_;

  const CoverageUpdate cov = coverage_.update(scan.transformed(lidar, Frame::kWorld));
  estimate_.push_back(t, odometry_->pose());
  truth_.push_back(t, truth);
  const double window = std::min(config_.rte_window, t - start_);
  out.rte = compute_rte(estimate_, truth_, t, window, 0.5 * config_.dt);
  out.reward = compute_reward(cov.new_count, cov.total_count, out.rte, config_.reward);

  observe();
  last_truth_ = truth;
  last_estimate_ = odometry_->pose();
  done_ = steps_ >= max_steps_;
  out.done = done_;
  return out;
}

}  // namespace aeos
