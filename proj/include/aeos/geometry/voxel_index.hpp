#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

namespace aeos {

struct VoxelKey {
  std::int32_t x = 0, y = 0, z = 0;
  bool operator==(const VoxelKey&) const = default;
  auto operator<=>(const VoxelKey&) const = default;
};

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    // Teschner et al. spatial hash primes.
    return (static_cast<std::size_t>(static_cast<std::uint32_t>(k.x)) * 73856093u) ^
           (static_cast<std::size_t>(static_cast<std::uint32_t>(k.y)) * 19349663u) ^
           (static_cast<std::size_t>(static_cast<std::uint32_t>(k.z)) * 83492791u);
  }
};

inline VoxelKey voxel_key(const Eigen::Vector3d& p, double cell_size) {
  return {static_cast<std::int32_t>(std::floor(p.x() / cell_size)),
          static_cast<std::int32_t>(std::floor(p.y() / cell_size)),
          static_cast<std::int32_t>(std::floor(p.z() / cell_size))};
}

struct Neighbor {
  std::uint32_t index = 0;
  double dist2 = 0.0;
};

/// Uniform voxel hash over an owned point set. Each point lives in exactly
/// one cell; cell contents are stored contiguously.
class VoxelIndex {
 public:
  VoxelIndex() = default;
  VoxelIndex(double cell_size, std::vector<Eigen::Vector3d> points);

  double cell_size() const { return cell_size_; }
  const std::vector<Eigen::Vector3d>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  std::size_t cell_count() const { return cells_.size(); }

  /// Indices of the points in one cell (empty span if the cell is vacant).
  std::span<const std::uint32_t> cell(const VoxelKey& key) const;

  std::optional<Neighbor> nearest(const Eigen::Vector3d& q, double max_dist) const;

  /// Up to k nearest points within max_dist, sorted by distance.
  std::vector<Neighbor> knn(const Eigen::Vector3d& q, std::size_t k, double max_dist) const;

  /// Calls fn(key, indices) for every occupied cell.
  void for_each_cell(
      const std::function<void(const VoxelKey&, std::span<const std::uint32_t>)>& fn) const;

 private:
  struct Range {
    std::uint32_t begin = 0;
    std::uint32_t count = 0;
  };

  double cell_size_ = 1.0;
  std::vector<Eigen::Vector3d> points_;
  std::vector<std::uint32_t> order_;
  std::unordered_map<VoxelKey, Range, VoxelKeyHash> cells_;
};

}  // namespace aeos
