#pragma once

#include <Eigen/Core>

#include "aeos/geometry/pose.hpp"

namespace aeos {

/// Body -> motor base -> rotor -> lidar chain. The rotor turns about the motor
/// base Z axis by rotor_angle; the two static extrinsics default to identity.
class FrameChain {
 public:
  FrameChain() = default;
  FrameChain(const Pose& body_to_motorbase, const Pose& motor_to_lidar, double rotor_angle);

  const Pose& body_to_motorbase() const { return body_to_motorbase_; }
  const Pose& motor_to_lidar() const { return motor_to_lidar_; }
  /// In [0, 2π).
  double rotor_angle() const { return rotor_angle_; }

  FrameChain with_angle(double rotor_angle) const;

  /// T^B_L at the current rotor angle.
  Pose lidar_in_body() const;

 private:
  Pose body_to_motorbase_;
  Pose motor_to_lidar_;
  double rotor_angle_ = 0.0;
};

/// World coordinates of a lidar-frame point:
/// R_WB (R_BMB (Rz(θ) (R_ML p + r_ML)) + r_BMB) + r_WB.
Eigen::Vector3d compose_frame_chain(const FrameChain& chain, const Pose& body_in_world,
                                   const Eigen::Vector3d& point_in_lidar);

}  // namespace aeos
