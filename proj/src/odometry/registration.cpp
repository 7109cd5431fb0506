#include "aeos/odometry/registration.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>

#include "aeos/common/error.hpp"

namespace aeos {
namespace {

Matrix6d symmetrized(const Matrix6d& m) { return 0.5 * (m + m.transpose()); }

}  // namespace

RegistrationResult register_scan(LocalMap& map, const std::vector<Eigen::Vector3d>& scan_body,
                                 const Pose& prior, const Matrix6d& prior_cov,
                                 const RegistrationConfig& config) {
  if (!(config.measurement_sigma > 0.0) || config.max_iterations < 1) {
    throw ConfigError("registration: invalid configuration");
  }
  const double w_meas = 1.0 / (config.measurement_sigma * config.measurement_sigma);
  const Matrix6d prior_info = symmetrized(prior_cov.inverse());

  RegistrationResult res;
  Pose x = prior;
  Matrix6d info_meas = Matrix6d::Zero();
  for (int it = 0; it < config.max_iterations; ++it) {
    Matrix6d h = Matrix6d::Zero();
    Vector6d g = Vector6d::Zero();
    info_meas.setZero();
    int count = 0;
    for (const auto& pb : scan_body) {
      const Eigen::Vector3d rp = x.rotation() * pb;
      const Eigen::Vector3d q = rp + x.translation();
      const auto m = map.nearest_plane(q);
      if (!m) continue;
      const double r = m->normal.dot(q - m->point);
      Vector6d j;
      j << rp.cross(m->normal), m->normal;
      const double w = std::abs(r) <= config.huber ? 1.0 : config.huber / std::abs(r);
      h.noalias() += (w * w_meas) * j * j.transpose();
      g.noalias() += (w * w_meas * r) * j;
      info_meas.noalias() += w_meas * j * j.transpose();
      ++count;
    }
    res.correspondences = count;
    if (count < config.min_correspondences) throw DegenerateRegistration(count);

    Vector6d e0;
    e0 << so3_log(x.rotation() * prior.rotation().transpose()), x.translation() - prior.translation();
    const Matrix6d lhs = symmetrized(h + prior_info);
    const Vector6d delta = lhs.ldlt().solve(-(g + prior_info * e0));
    x = x.boxplus(delta.head<3>(), delta.tail<3>()).normalized();
    res.iterations = it + 1;
    if (config.record_iterates) res.iterates.push_back(x);
    if (delta.norm() < config.tolerance) {
      res.converged = true;
      break;
    }
  }
  res.pose = x;
  res.covariance = symmetrized(symmetrized(info_meas + prior_info).inverse());
  return res;
}

Odometry::Odometry(const OdometryConfig& config, const Pose& initial)
    : config_(config),
      pose_(initial),
      covariance_(config.initial_sigma2.asDiagonal()),
      map_(config.map) {}

Odometry::Update Odometry::update(const PointCloud& scan_lidar, const FrameChain& chain,
                                  const Pose& prior, double time) {
  if (scan_lidar.frame() != Frame::kLidar) throw InputError("odometry expects a lidar-frame scan");
  const Pose lidar_in_body = chain.lidar_in_body();
  std::vector<Eigen::Vector3d> body;
  body.reserve(scan_lidar.size());
  for (const auto& p : scan_lidar.points()) body.push_back(lidar_in_body * p);

  Update u;
  const Matrix6d prior_cov = covariance_ + Matrix6d(config_.process_noise.asDiagonal());
  if (!seeded_ || map_.empty()) {
    pose_ = prior;
    if (seeded_) covariance_ = prior_cov;
    seeded_ = true;
    u.status = UpdateStatus::kBootstrap;
  } else {
    try {
      auto res = register_scan(map_, body, prior, prior_cov, config_.registration);
      pose_ = res.pose;
      covariance_ = res.covariance;
      u.status = UpdateStatus::kRegistered;
      u.correspondences = res.correspondences;
      u.iterations = res.iterations;
    } catch (const DegenerateRegistration& e) {
      pose_ = prior;
      covariance_ = config_.degenerate_inflation * prior_cov;
      u.status = UpdateStatus::kDegenerate;
      u.correspondences = e.correspondences();
    }
  }
  std::vector<Eigen::Vector3d> world;
  world.reserve(body.size());
  for (const auto& p : body) world.push_back(pose_ * p);
  map_.insert(world, time);
  map_.trim(time);
  return u;
}

}  // namespace aeos
