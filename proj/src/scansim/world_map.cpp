#include "aeos/scansim/world_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aeos/common/error.hpp"
#include "aeos/geometry/normals.hpp"

namespace aeos {

RayIndex::RayIndex(double cell_size, double radius, std::span<const Eigen::Vector3d> points)
    : cell_size_(cell_size) {
  if (!(cell_size > 0.0) || !(radius >= 0.0)) throw InputError("RayIndex: bad cell size or radius");
  struct Entry {
    VoxelKey key;
    std::uint32_t id;
  };
  std::vector<Entry> entries;
  entries.reserve(points.size() * 2);
  for (std::uint32_t i = 0; i < points.size(); ++i) {
    const Eigen::Vector3d r = Eigen::Vector3d::Constant(radius);
    const VoxelKey lo = voxel_key(points[i] - r, cell_size);
    const VoxelKey hi = voxel_key(points[i] + r, cell_size);
    for (int x = lo.x; x <= hi.x; ++x) {
      for (int y = lo.y; y <= hi.y; ++y) {
        for (int z = lo.z; z <= hi.z; ++z) entries.push_back({{x, y, z}, i});
      }
    }
  }
  std::stable_sort(entries.begin(), entries.end(),
                   [](const Entry& a, const Entry& b) { return a.key < b.key; });
  xs_.resize(entries.size());
  ys_.resize(entries.size());
  zs_.resize(entries.size());
  ids_.resize(entries.size());
  cells_.reserve(entries.size() / 4 + 1);
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i;
    while (j < entries.size() && entries[j].key == entries[i].key) {
      const auto& p = points[entries[j].id];
      xs_[j] = p.x();
      ys_[j] = p.y();
      zs_[j] = p.z();
      ids_[j] = entries[j].id;
      ++j;
    }
    cells_.emplace(entries[i].key,
                   Cell{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j - i)});
    i = j;
  }
}

const RayIndex::Cell* RayIndex::find(const VoxelKey& key) const {
  const auto it = cells_.find(key);
  return it == cells_.end() ? nullptr : &it->second;
}

WorldMap::WorldMap(const PointCloud& world_points, std::vector<Eigen::Vector3d> normals,
                   const WorldMapOptions& options)
    : options_(options),
      index_(options.index_cell, world_points.points()),
      normals_(std::move(normals)),
      hit_radius_(options.hit_radius_factor * options.sample_pitch) {
  if (world_points.frame() != Frame::kWorld) throw InputError("WorldMap expects a world-frame cloud");
  if (normals_.size() != index_.size()) throw InputError("WorldMap: one normal per point required");
  for (const auto& n : normals_) {
    if (std::abs(n.norm() - 1.0) > 1e-6) throw InputError("WorldMap: normals must be unit length");
  }
  if (!(options.sample_pitch > 0.0) || !(options.ray_cell > 0.0)) {
    throw InputError("WorldMap: pitch and ray cell must be positive");
  }
  ray_index_ = RayIndex(options.ray_cell, hit_radius_, index_.points());
}

WorldMap WorldMap::with_estimated_normals(const PointCloud& world_points,
                                          const WorldMapOptions& options) {
  const VoxelIndex tmp(options.index_cell, world_points.points());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto normals = estimate_normals(tmp, 10, std::max(options.index_cell, 4.0 * options.sample_pitch),
                                  Eigen::Vector3d::Constant(nan));
  return WorldMap(world_points, std::move(normals), options);
}

}  // namespace aeos
