#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "aeos/geometry/voxel_index.hpp"

namespace aeos {

/// Smallest-eigenvalue eigenvector of the neighbourhood scatter matrix.
/// Returns nullopt-like zero vector when fewer than 3 points are given.
Eigen::Vector3d pca_normal(std::span<const Eigen::Vector3d> neighborhood);

/// k-NN PCA normal for every point of `index`, flipped to face `viewpoint`
/// when one is given (non-finite viewpoint: no orientation).
std::vector<Eigen::Vector3d> estimate_normals(const VoxelIndex& index, std::size_t k,
                                              double radius,
                                              const Eigen::Vector3d& viewpoint);

}  // namespace aeos
