#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "aeos/geometry/trajectory.hpp"
#include "aeos/scansim/world_map.hpp"

namespace aeos {

enum class SceneKind { kTunnel, kRoom, kForest };

/// Throws ConfigError for unknown names.
SceneKind parse_scene_kind(std::string_view name);
std::string_view scene_kind_name(SceneKind kind);

struct SceneParams {
  double pitch = 0.1;           // m, surface sampling
  double speed = 1.0;           // m/s along the path
  double pose_dt = 0.05;        // s, trajectory sample spacing
  double flight_height = 1.5;   // m
  double duration = 300.0;      // s, looping scenes (room, forest)

  double tunnel_length = 300.0;
  double tunnel_width = 4.0;
  double tunnel_height = 3.0;
  double pillar_spacing = 12.0;
  double texture_amplitude = 0.05;

  double room_size = 10.0;
  double room_height = 3.0;
  double lap_radius = 2.5;
  int clutter_boxes = 4;

  double forest_extent = 30.0;   // side of the square ground patch
  double forest_density = 0.05;  // trees per m²
  double forest_path_radius = 8.0;

  WorldMapOptions map;
};

struct Scene {
  std::string name;
  WorldMap map;
  Trajectory trajectory;
};

/// Deterministic in (kind, seed, params).
Scene generate_synthetic_scene(SceneKind kind, std::uint64_t seed, const SceneParams& params);

/// Closed axis-aligned box sampled at `pitch`, normals facing inward.
WorldMap make_box_map(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, double pitch,
                      const WorldMapOptions& options);

/// Poses at `pose_dt` spacing moving at constant speed along a polyline,
/// yaw following the tangent. The final pose sits exactly at the path end.
Trajectory trajectory_along_path(const std::vector<Eigen::Vector3d>& path, double speed,
                                 double pose_dt);

}  // namespace aeos
