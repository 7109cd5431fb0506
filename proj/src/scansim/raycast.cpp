#include "aeos/scansim/raycast.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aeos/simd/kernels.hpp"

namespace aeos {

namespace {

constexpr double kMinIncidence = 0.05;  // |cos| below this counts as grazing

}  // namespace

RayHit cast_ray(const WorldMap& map, const Eigen::Vector3d& origin,
                const Eigen::Vector3d& direction, double max_t) {
  RayHit best;
  if (map.empty()) return best;
  const RayIndex& grid = map.ray_index();
  const double cell = grid.cell_size();
  const double radius = map.hit_radius();
  const double r2 = radius * radius;
  const auto& kernels = simd::active();
  const auto& normals = map.normals();

  simd::RayQuery q{origin.x(), origin.y(), origin.z(),
                   direction.x(), direction.y(), direction.z(), r2, 0.0};

  // Amanatides-Woo traversal.
  VoxelKey key = voxel_key(origin, cell);
  int step[3];
  double t_max[3], t_delta[3];
  const int key_arr[3] = {key.x, key.y, key.z};
  for (int a = 0; a < 3; ++a) {
    const double d = direction[a];
    if (d > 0.0) {
      step[a] = 1;
      t_max[a] = ((key_arr[a] + 1) * cell - origin[a]) / d;
      t_delta[a] = cell / d;
    } else if (d < 0.0) {
      step[a] = -1;
      t_max[a] = (key_arr[a] * cell - origin[a]) / d;
      t_delta[a] = -cell / d;
    } else {
      step[a] = 0;
      t_max[a] = std::numeric_limits<double>::infinity();
      t_delta[a] = std::numeric_limits<double>::infinity();
    }
  }

  // Each map point is a disc of the hit radius in its tangent plane. The
  // kernel screens cells for any point near the ray; the disc test then runs
  // only on those. A crossing at parameter t is found by the time the walk
  // passes t, because the disc centre lies within the radius of the crossing
  // and was registered in that cell. If only grazing points are near the ray
  // the nearest of them is used as is.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double disc_t = kInf, foot_t = kInf;
  std::int64_t disc_id = -1, foot_id = -1;
  const double limit = max_t + radius + cell;
  double t_entry = 0.0;
  while (t_entry <= limit) {
    if (const auto* c = grid.find(key)) {
      const auto r = kernels.ray_nearest(q, grid.xs() + c->begin, grid.ys() + c->begin,
                                         grid.zs() + c->begin, c->count);
      if (r.index >= 0) {
        if (r.t < foot_t) {
          foot_t = r.t;
          foot_id = grid.point_id(c->begin + static_cast<std::uint32_t>(r.index));
        }
        for (std::uint32_t k = c->begin; k < c->begin + c->count; ++k) {
          const std::uint32_t id = grid.point_id(k);
          const Eigen::Vector3d rel(grid.xs()[k] - q.ox, grid.ys()[k] - q.oy, grid.zs()[k] - q.oz);
          const double cos_inc = normals[id].dot(direction);
          if (std::abs(cos_inc) < kMinIncidence) continue;
          const double t = normals[id].dot(rel) / cos_inc;
          if (!(t > 0.0) || t > disc_t) continue;
          if ((direction * t - rel).squaredNorm() > r2) continue;
          if (t < disc_t || id < disc_id) {
            disc_t = t;
            disc_id = id;
          }
        }
      }
    }
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    t_entry = t_max[axis];
    if (disc_id >= 0 && t_entry > disc_t) break;
    if (disc_id < 0 && foot_id >= 0 && t_entry > foot_t + 4.0 * radius) break;
    if (axis == 0) key.x += step[0];
    else if (axis == 1) key.y += step[1];
    else key.z += step[2];
    t_max[axis] += t_delta[axis];
  }
  if (disc_id >= 0) {
    best.point = disc_id;
    best.range = disc_t;
  } else if (foot_id >= 0) {
    best.point = foot_id;
    best.range = (map.points()[static_cast<std::size_t>(foot_id)] - origin).norm();
  }
  return best;
}

PointCloud raycast_scan(const WorldMap& map, const SensorModel& sensor,
                        const Pose& lidar_in_world, Rng* rng) {
  PointCloud out(Frame::kLidar);
  if (map.empty()) return out;
  const auto dirs = sensor.ray_directions();
  out.reserve(dirs.size());
  const Eigen::Vector3d origin = lidar_in_world.translation();
  const auto& pts = map.points();
  for (const auto& d : dirs) {
    const Eigen::Vector3d dw = lidar_in_world.rotation() * d;
    const RayHit hit = cast_ray(map, origin, dw, sensor.max_range);
    if (hit.point < 0) continue;
    double range = hit.range;
    if (!(range > 0.0)) range = (pts[static_cast<std::size_t>(hit.point)] - origin).norm();
    if (range > sensor.max_range) continue;
    if (rng != nullptr && sensor.range_sigma > 0.0) {
      range += rng->normal(0.0, sensor.range_sigma);
      range = std::clamp(range, 1e-6, sensor.max_range);
    }
    out.push_back(d * range);
  }
  return out;
}

}  // namespace aeos
