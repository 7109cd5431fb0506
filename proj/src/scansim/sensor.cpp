#include "aeos/scansim/sensor.hpp"

#include <cmath>
#include <numbers>

#include "aeos/common/angles.hpp"
#include "aeos/common/error.hpp"

namespace aeos {

void SensorModel::validate() const {
  if (!(fov_h > 0.0 && fov_h <= kTwoPi + 1e-12)) throw ConfigError("sensor: fov_h must be in (0, 2π]");
  if (!(fov_v > 0.0 && fov_v <= std::numbers::pi + 1e-12)) throw ConfigError("sensor: fov_v must be in (0, π]");
  if (n_az < 1 || n_el < 1) throw ConfigError("sensor: ray grid must be at least 1x1");
  if (!(max_range > 0.0)) throw ConfigError("sensor: max_range must be > 0");
  if (!(range_sigma >= 0.0)) throw ConfigError("sensor: range_sigma must be >= 0");
}

std::vector<Eigen::Vector3d> SensorModel::ray_directions() const {
  validate();
  std::vector<Eigen::Vector3d> dirs;
  dirs.reserve(static_cast<std::size_t>(n_az) * static_cast<std::size_t>(n_el));
  for (int i = 0; i < n_az; ++i) {
    const double az = -fov_h / 2.0 + (i + 0.5) * fov_h / n_az;
    for (int j = 0; j < n_el; ++j) {
      const double el = -fov_v / 2.0 + (j + 0.5) * fov_v / n_el;
      dirs.emplace_back(std::cos(el) * std::cos(az), std::cos(el) * std::sin(az), std::sin(el));
    }
  }
  return dirs;
}

SensorModel SensorModel::mid360_like() {
  SensorModel s;
  s.fov_h = kTwoPi;
  s.fov_v = 59.0 * std::numbers::pi / 180.0;
  s.n_az = 96;
  s.n_el = 12;
  s.max_range = 40.0;
  return s;
}

}  // namespace aeos
