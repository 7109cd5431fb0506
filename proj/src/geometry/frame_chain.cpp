#include "aeos/geometry/frame_chain.hpp"

#include "aeos/common/angles.hpp"
#include "aeos/common/error.hpp"

namespace aeos {

FrameChain::FrameChain(const Pose& body_to_motorbase, const Pose& motor_to_lidar,
                       double rotor_angle)
    : body_to_motorbase_(body_to_motorbase),
      motor_to_lidar_(motor_to_lidar),
      rotor_angle_(wrap_two_pi(rotor_angle)) {
  if (!std::isfinite(rotor_angle)) throw InputError("FrameChain: non-finite rotor angle");
}

FrameChain FrameChain::with_angle(double rotor_angle) const {
  return FrameChain(body_to_motorbase_, motor_to_lidar_, rotor_angle);
}

Pose FrameChain::lidar_in_body() const {
  const Pose rotor(rot_z(rotor_angle_), Eigen::Vector3d::Zero());
  return body_to_motorbase_ * rotor * motor_to_lidar_;
}

Eigen::Vector3d compose_frame_chain(const FrameChain& chain, const Pose& body_in_world,
                                    const Eigen::Vector3d& point_in_lidar) {
  const Pose& mb = chain.body_to_motorbase();
  const Pose& ml = chain.motor_to_lidar();
  const Eigen::Vector3d in_motor = ml.rotation() * point_in_lidar + ml.translation();
  const Eigen::Vector3d in_motorbase = rot_z(chain.rotor_angle()) * in_motor;
  const Eigen::Vector3d in_body = mb.rotation() * in_motorbase + mb.translation();
  return body_in_world.rotation() * in_body + body_in_world.translation();
}

}  // namespace aeos
