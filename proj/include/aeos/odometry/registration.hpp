#pragma once

#include <Eigen/Core>
#include <vector>

#include "aeos/geometry/frame_chain.hpp"
#include "aeos/geometry/point_cloud.hpp"
#include "aeos/geometry/pose.hpp"
#include "aeos/odometry/local_map.hpp"

namespace aeos {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Rotation block first (rad²), then translation (m²).
struct RegistrationConfig {
  int max_iterations = 8;
  double tolerance = 1e-6;        // stop when the update norm falls below this
  double huber = 0.1;             // m
  int min_correspondences = 10;
  double measurement_sigma = 0.05;  // m, point-to-plane residual noise
  bool record_iterates = false;
};

struct RegistrationResult {
  Pose pose;
  Matrix6d covariance = Matrix6d::Identity();
  int correspondences = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<Pose> iterates;  // pose after each iteration, when recorded
};

/// MAP point-to-plane Gauss-Newton of body-frame points against the map,
/// anchored to `prior` with covariance `prior_cov`. The posterior covariance
/// is (Σ J Jᵀ / σ² + prior_cov⁻¹)⁻¹ with J = [(R p) × n; n] at the solution.
/// Throws DegenerateRegistration below min_correspondences.
RegistrationResult register_scan(LocalMap& map, const std::vector<Eigen::Vector3d>& scan_body,
                                 const Pose& prior, const Matrix6d& prior_cov,
                                 const RegistrationConfig& config);

struct OdometryConfig {
  LocalMapConfig map;
  RegistrationConfig registration;
  Vector6d process_noise = (Vector6d() << 2.5e-5, 2.5e-5, 2.5e-5, 4e-4, 4e-4, 4e-4).finished();
  double degenerate_inflation = 10.0;
  Vector6d initial_sigma2 = Vector6d::Constant(1e-6);
};

enum class UpdateStatus { kBootstrap, kRegistered, kDegenerate };

/// Single-writer scan-to-map odometry state.
class Odometry {
 public:
  Odometry(const OdometryConfig& config, const Pose& initial);

  struct Update {
    UpdateStatus status = UpdateStatus::kBootstrap;
    int correspondences = 0;
    int iterations = 0;
  };

  /// Registers a lidar-frame scan taken at `time` with the rotor at the
  /// chain's angle. `prior` is the propagated pose guess. The first call
  /// seeds the map at the prior.
  Update update(const PointCloud& scan_lidar, const FrameChain& chain, const Pose& prior,
                double time);

  const Pose& pose() const { return pose_; }
  const Matrix6d& covariance() const { return covariance_; }
  LocalMap& map() { return map_; }
  const LocalMap& map() const { return map_; }
  const OdometryConfig& config() const { return config_; }

 private:
  OdometryConfig config_;
  Pose pose_;
  Matrix6d covariance_;
  LocalMap map_;
  bool seeded_ = false;
};

}  // namespace aeos
