#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace aeos {

/// Rigid transform T^A_B: maps coordinates in frame B to frame A.
class Pose {
 public:
  Pose() = default;

  /// Throws InputError unless rotation is orthonormal with det +1 (1e-9).
  Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static Pose identity() { return {}; }
  static Pose from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& t);
  static Pose from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Quaterniond quaternion() const;
  Eigen::Matrix4d matrix() const;

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation_ * p + translation_;
  }
  Pose operator*(const Pose& rhs) const;
  Pose inverse() const;

  /// Left-multiplied update: R <- Exp(dtheta) R, t <- t + dt.
  Pose boxplus(const Eigen::Vector3d& dtheta, const Eigen::Vector3d& dt) const;

  /// Re-orthonormalizes the rotation through its quaternion.
  Pose normalized() const;

  static bool is_rotation(const Eigen::Matrix3d& r, double tol = 1e-9);

 private:
  struct Unchecked {};
  Pose(Unchecked, const Eigen::Matrix3d& r, const Eigen::Vector3d& t)
      : rotation_(r), translation_(t) {}

  Eigen::Matrix3d rotation_ = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_ = Eigen::Vector3d::Zero();
};

Eigen::Matrix3d rot_z(double angle);
Eigen::Matrix3d skew(const Eigen::Vector3d& v);
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w);
Eigen::Vector3d so3_log(const Eigen::Matrix3d& r);

}  // namespace aeos
