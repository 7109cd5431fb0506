#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <vector>

#include "aeos/geometry/point_cloud.hpp"
#include "aeos/geometry/voxel_index.hpp"

namespace aeos {

struct WorldMapOptions {
  double index_cell = 0.5;       // m, nearest-neighbour hash
  double sample_pitch = 0.1;     // m, surface sampling of the map
  double hit_radius_factor = 0.75;  // hit radius = factor * sample_pitch
  double ray_cell = 0.25;        // m, raycast acceleration grid
};

/// Raycast acceleration grid: each point is registered in every cell its
/// hit ball overlaps, so walking the cells a ray crosses finds every point
/// within the hit radius. Coordinates are stored per cell as SoA for the
/// ray_nearest kernel.
class RayIndex {
 public:
  struct Cell {
    std::uint32_t begin = 0;
    std::uint32_t count = 0;
  };

  RayIndex() = default;
  RayIndex(double cell_size, double radius, std::span<const Eigen::Vector3d> points);

  double cell_size() const { return cell_size_; }
  const Cell* find(const VoxelKey& key) const;
  const double* xs() const { return xs_.data(); }
  const double* ys() const { return ys_.data(); }
  const double* zs() const { return zs_.data(); }
  std::uint32_t point_id(std::uint32_t slot) const { return ids_[slot]; }

 private:
  double cell_size_ = 1.0;
  std::unordered_map<VoxelKey, Cell, VoxelKeyHash> cells_;
  std::vector<double> xs_, ys_, zs_;
  std::vector<std::uint32_t> ids_;
};

/// Ground-truth point map with unit normals, a voxel hash for spatial queries
/// and a raycast grid. Immutable after construction.
class WorldMap {
 public:
  WorldMap(const PointCloud& world_points, std::vector<Eigen::Vector3d> normals,
           const WorldMapOptions& options = {});

  /// For maps without normals (e.g. PLY input): 10-NN PCA normals.
  static WorldMap with_estimated_normals(const PointCloud& world_points,
                                         const WorldMapOptions& options = {});

  const std::vector<Eigen::Vector3d>& points() const { return index_.points(); }
  const std::vector<Eigen::Vector3d>& normals() const { return normals_; }
  std::size_t size() const { return index_.size(); }
  bool empty() const { return index_.empty(); }
  const VoxelIndex& index() const { return index_; }
  const RayIndex& ray_index() const { return ray_index_; }
  double hit_radius() const { return hit_radius_; }
  const WorldMapOptions& options() const { return options_; }

 private:
  WorldMapOptions options_;
  VoxelIndex index_;
  std::vector<Eigen::Vector3d> normals_;
  double hit_radius_ = 0.0;
  RayIndex ray_index_;
};

}  // namespace aeos
