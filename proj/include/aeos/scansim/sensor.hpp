#pragma once

#include <Eigen/Core>
#include <vector>

namespace aeos {

/// Ray-grid LiDAR model in its own frame: +x forward, rays spread uniformly
/// over the horizontal and vertical fields of view.
struct SensorModel {
  double fov_h = 70.0 * 0.017453292519943295;  // rad, in (0, 2π]
  double fov_v = 77.0 * 0.017453292519943295;  // rad, in (0, π]
  int n_az = 32;
  int n_el = 32;
  double max_range = 30.0;   // m
  double range_sigma = 0.01;  // m

  /// Throws ConfigError when a field is outside its domain.
  void validate() const;

  /// n_az * n_el unit directions, azimuth-major.
  std::vector<Eigen::Vector3d> ray_directions() const;

  /// 360 x 59 degree preset resembling a Mid-360 head.
  static SensorModel mid360_like();
};

}  // namespace aeos
