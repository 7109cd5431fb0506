#include "aeos/scansim/coverage.hpp"

#include "aeos/common/error.hpp"

namespace aeos {

VoxelCoverage::VoxelCoverage(double voxel_size) : voxel_size_(voxel_size) {
  if (!(voxel_size > 0.0)) throw ConfigError("coverage voxel size must be positive");
}

CoverageUpdate VoxelCoverage::update(const PointCloud& scan_in_world) {
  if (scan_in_world.frame() != Frame::kWorld) throw InputError("coverage expects a world-frame scan");
  std::unordered_set<VoxelKey, VoxelKeyHash> touched;
  touched.reserve(scan_in_world.size());
  for (const auto& p : scan_in_world.points()) touched.insert(voxel_key(p, voxel_size_));
  CoverageUpdate u;
  u.total_count = touched.size();
  for (const auto& k : touched) {
    if (seen_.insert(k).second) ++u.new_count;
  }
  return u;
}

}  // namespace aeos
