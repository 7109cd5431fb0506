#include "aeos/geometry/pose.hpp"

#include <cmath>

#include "aeos/common/error.hpp"

namespace aeos {

Pose::Pose(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!is_rotation(rotation)) throw InputError("Pose: rotation is not in SO(3)");
  if (!translation.allFinite()) throw InputError("Pose: non-finite translation");
}

bool Pose::is_rotation(const Eigen::Matrix3d& r, double tol) {
  if (!r.allFinite()) return false;
  const double ortho = (r.transpose() * r - Eigen::Matrix3d::Identity()).norm();
  return ortho <= tol && std::abs(r.determinant() - 1.0) <= tol;
}

Pose Pose::from_quaternion(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) {
  return Pose(q.normalized().toRotationMatrix(), t);
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Eigen::Quaterniond Pose::quaternion() const { return Eigen::Quaterniond(rotation_); }

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::operator*(const Pose& rhs) const {
  return Pose(Unchecked{}, rotation_ * rhs.rotation_, rotation_ * rhs.translation_ + translation_);
}

Pose Pose::inverse() const {
  const Eigen::Matrix3d rt = rotation_.transpose();
  return Pose(Unchecked{}, rt, -(rt * translation_));
}

Pose Pose::boxplus(const Eigen::Vector3d& dtheta, const Eigen::Vector3d& dt) const {
  return Pose(Unchecked{}, so3_exp(dtheta) * rotation_, translation_ + dt);
}

Pose Pose::normalized() const {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  return Pose(Unchecked{}, q.toRotationMatrix(), translation_);
}

Eigen::Matrix3d rot_z(double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  Eigen::Matrix3d r;
  r << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
  return r;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d m;
  m << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return m;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  const double angle = w.norm();
  if (angle < 1e-12) return Eigen::Matrix3d::Identity() + skew(w);
  return Eigen::AngleAxisd(angle, w / angle).toRotationMatrix();
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& r) {
  const Eigen::AngleAxisd aa(r);
  return aa.angle() * aa.axis();
}

}  // namespace aeos
