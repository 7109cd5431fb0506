#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "aeos/geometry/voxel_index.hpp"

namespace aeos {

struct LocalMapConfig {
  double window = 5.0;        // s, points older than this are dropped
  double voxel = 0.1;         // m, one stored point per voxel
  double max_match_dist = 0.3;  // m, correspondence gate
  int normal_k = 10;
  double normal_radius = 0.5;   // m
  double planarity = 0.1;       // accept a plane when λ_min < planarity · λ_mid
  double plane_tolerance = 0.02;  // m, and every neighbour lies this close to it
};

/// Sliding-window scan-to-map model: voxel-downsampled world points with
/// PCA plane normals. Normals are computed at insertion and refreshed on
/// demand while their neighbourhood is still sparse.
class LocalMap {
 public:
  struct Match {
    Eigen::Vector3d point;
    Eigen::Vector3d normal;
    double dist2 = 0.0;
  };

  explicit LocalMap(const LocalMapConfig& config = {});

  const LocalMapConfig& config() const { return config_; }
  std::size_t size() const { return live_; }
  bool empty() const { return live_ == 0; }

  /// Adds world-frame points stamped `time`. Occupied voxels are refreshed
  /// (their timestamp moves forward) rather than duplicated.
  void insert(std::span<const Eigen::Vector3d> world_points, double time);

  /// Drops points last refreshed before now - window.
  void trim(double now);

  /// Nearest stored point within max_match_dist that sits on a plane.
  std::optional<Match> nearest_plane(const Eigen::Vector3d& q);

  /// Live points in storage order.
  std::vector<Eigen::Vector3d> points() const;

 private:
  struct Entry {
    Eigen::Vector3d p;
    Eigen::Vector3d n = Eigen::Vector3d::UnitZ();
    double time = 0.0;
    std::uint64_t normal_revision = 0;
    int support = 0;  // neighbours used for the normal
    bool planar = false;
    bool alive = false;
  };

  void refresh_normal(std::uint32_t id);
  VoxelKey coarse_key(const Eigen::Vector3d& p) const { return voxel_key(p, coarse_cell_); }

  LocalMapConfig config_;
  double coarse_cell_;
  std::vector<Entry> entries_;
  std::vector<std::uint32_t> free_;
  std::unordered_map<VoxelKey, std::uint32_t, VoxelKeyHash> fine_;
  std::unordered_map<VoxelKey, std::vector<std::uint32_t>, VoxelKeyHash> coarse_;
  std::deque<std::pair<double, std::vector<std::uint32_t>>> batches_;
  std::uint64_t revision_ = 0;
  std::size_t live_ = 0;
};

}  // namespace aeos
