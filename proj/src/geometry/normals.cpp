#include "aeos/geometry/normals.hpp"

#include <Eigen/Eigenvalues>

namespace aeos {

Eigen::Vector3d pca_normal(std::span<const Eigen::Vector3d> neighborhood) {
  if (neighborhood.size() < 3) return Eigen::Vector3d::Zero();
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& p : neighborhood) mean += p;
  mean /= static_cast<double>(neighborhood.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : neighborhood) {
    const Eigen::Vector3d d = p - mean;
    cov.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
  es.computeDirect(cov);
  return es.eigenvectors().col(0).normalized();
}

std::vector<Eigen::Vector3d> estimate_normals(const VoxelIndex& index, std::size_t k,
                                              double radius,
                                              const Eigen::Vector3d& viewpoint) {
  const auto& pts = index.points();
  std::vector<Eigen::Vector3d> normals(pts.size(), Eigen::Vector3d::UnitZ());
  std::vector<Eigen::Vector3d> nb;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    nb.clear();
    for (const auto& n : index.knn(pts[i], k, radius)) nb.push_back(pts[n.index]);
    Eigen::Vector3d n = pca_normal(nb);
    if (n.squaredNorm() == 0.0) continue;
    if (viewpoint.allFinite() && n.dot(viewpoint - pts[i]) < 0.0) n = -n;
    normals[i] = n;
  }
  return normals;
}

}  // namespace aeos
