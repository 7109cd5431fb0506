#pragma once

#include <unordered_set>

#include "aeos/geometry/point_cloud.hpp"
#include "aeos/geometry/voxel_index.hpp"

namespace aeos {

struct CoverageUpdate {
  std::size_t new_count = 0;
  std::size_t total_count = 0;
  double ratio() const {
    return total_count == 0 ? 0.0
                            : static_cast<double>(new_count) / static_cast<double>(total_count);
  }
};

/// Set of voxels observed so far in an episode. Only grows.
class VoxelCoverage {
 public:
  explicit VoxelCoverage(double voxel_size = 0.5);

  double voxel_size() const { return voxel_size_; }
  std::size_t size() const { return seen_.size(); }
  bool contains(const VoxelKey& key) const { return seen_.contains(key); }

  /// Requires a world-frame scan (InputError otherwise).
  CoverageUpdate update(const PointCloud& scan_in_world);

 private:
  double voxel_size_;
  std::unordered_set<VoxelKey, VoxelKeyHash> seen_;
};

}  // namespace aeos
