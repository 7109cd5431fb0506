#pragma once

#include "aeos/common/rng.hpp"
#include "aeos/geometry/point_cloud.hpp"
#include "aeos/geometry/pose.hpp"
#include "aeos/scansim/sensor.hpp"
#include "aeos/scansim/world_map.hpp"

namespace aeos {

struct RayHit {
  double range = 0.0;       // ray parameter where it crosses the hit surface
  std::int64_t point = -1;  // map point index, -1 on a miss
};

/// Walks the raycast grid front to back. Map points are discs of the hit
/// radius in their tangent planes; the hit is the first disc the ray crosses.
/// `direction` must be unit.
RayHit cast_ray(const WorldMap& map, const Eigen::Vector3d& origin,
                const Eigen::Vector3d& direction, double max_t);

/// Synthesizes one scan. Each ray reports the distance at which it crosses
/// the tangent plane of the map point it hits, plus Gaussian noise, clamped to (0, max_range]; misses and hits
/// beyond max_range yield no point. Output is in the lidar frame.
/// Pass rng = nullptr (or sensor.range_sigma = 0) for noise-free ranges.
PointCloud raycast_scan(const WorldMap& map, const SensorModel& sensor,
                        const Pose& lidar_in_world, Rng* rng);

}  // namespace aeos
