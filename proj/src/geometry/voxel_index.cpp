#include "aeos/geometry/voxel_index.hpp"

#include <algorithm>
#include <numeric>

#include "aeos/common/error.hpp"

namespace aeos {

VoxelIndex::VoxelIndex(double cell_size, std::vector<Eigen::Vector3d> points)
    : cell_size_(cell_size), points_(std::move(points)) {
  if (!(cell_size > 0.0)) throw InputError("VoxelIndex: cell size must be > 0");
  std::vector<VoxelKey> keys(points_.size());
  for (std::size_t i = 0; i < points_.size(); ++i) keys[i] = voxel_key(points_[i], cell_size_);
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  std::stable_sort(order_.begin(), order_.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return keys[a] < keys[b]; });
  cells_.reserve(points_.size() / 4 + 1);
  std::size_t i = 0;
  while (i < order_.size()) {
    const VoxelKey key = keys[order_[i]];
    std::size_t j = i + 1;
    while (j < order_.size() && keys[order_[j]] == key) ++j;
    cells_.emplace(key, Range{static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j - i)});
    i = j;
  }
}

std::span<const std::uint32_t> VoxelIndex::cell(const VoxelKey& key) const {
  const auto it = cells_.find(key);
  if (it == cells_.end()) return {};
  return {order_.data() + it->second.begin, it->second.count};
}

std::optional<Neighbor> VoxelIndex::nearest(const Eigen::Vector3d& q, double max_dist) const {
  if (points_.empty()) return std::nullopt;
  const VoxelKey c = voxel_key(q, cell_size_);
  const int r = static_cast<int>(std::ceil(max_dist / cell_size_));
  const double max2 = max_dist * max_dist;
  std::optional<Neighbor> best;
  for (int dx = -r; dx <= r; ++dx) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dz = -r; dz <= r; ++dz) {
        for (std::uint32_t idx : cell({c.x + dx, c.y + dy, c.z + dz})) {
          const double d2 = (points_[idx] - q).squaredNorm();
          if (d2 <= max2 && (!best || d2 < best->dist2 ||
                             (d2 == best->dist2 && idx < best->index))) {
            best = Neighbor{idx, d2};
          }
        }
      }
    }
  }
  return best;
}

std::vector<Neighbor> VoxelIndex::knn(const Eigen::Vector3d& q, std::size_t k,
                                      double max_dist) const {
  std::vector<Neighbor> out;
  if (points_.empty() || k == 0) return out;
  const VoxelKey c = voxel_key(q, cell_size_);
  const int r = static_cast<int>(std::ceil(max_dist / cell_size_));
  const double max2 = max_dist * max_dist;
  for (int dx = -r; dx <= r; ++dx) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dz = -r; dz <= r; ++dz) {
        for (std::uint32_t idx : cell({c.x + dx, c.y + dy, c.z + dz})) {
          const double d2 = (points_[idx] - q).squaredNorm();
          if (d2 <= max2) out.push_back({idx, d2});
        }
      }
    }
  }
  const auto less = [](const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  };
  if (out.size() > k) {
    std::partial_sort(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(k), out.end(), less);
    out.resize(k);
  } else {
    std::sort(out.begin(), out.end(), less);
  }
  return out;
}

void VoxelIndex::for_each_cell(
    const std::function<void(const VoxelKey&, std::span<const std::uint32_t>)>& fn) const {
  for (const auto& [key, range] : cells_) fn(key, {order_.data() + range.begin, range.count});
}

}  // namespace aeos
