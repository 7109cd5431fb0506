#pragma once

#include <Eigen/Core>
#include <vector>

#include "aeos/geometry/pano.hpp"
#include "aeos/geometry/pose.hpp"
#include "aeos/scansim/sensor.hpp"

namespace aeos {

using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Vector6d = Eigen::Matrix<double, 6, 1>;

/// World-frame points with unit normals.
struct OrientedPoints {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;
  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
};

struct ObservabilityResult {
  double angle = 0.0;
  Matrix6d info = Matrix6d::Zero();  // Λ, rotation block first
  double u_value = 0.0;              // trace(W Λ⁻¹)
  std::size_t point_count = 0;
};

/// True when the bin-centre azimuth of column u lies within half the
/// horizontal FoV of `angle` (across the seam) and row v within the
/// vertical FoV.
bool pano_column_in_window(int u, int width, double angle, double fov_h);
bool pano_row_in_window(int v, int height, double fov_v);

/// Unit normal at a pano pixel from the cross product of neighbouring
/// back-projected points; falls back to facing the sensor where neighbours
/// are missing or straddle a depth jump. Body frame.
Eigen::Vector3d pano_pixel_normal(const PanoDepthMap& pano, int u, int v);

/// Pano pixels inside the sensor window centred on `angle`, back-projected
/// and moved to the world by the body pose estimate.
OrientedPoints predict_scan(const PanoDepthMap& pano, double angle, const SensorModel& sensor,
                            const Pose& body_pose);

/// [ (R̂p) × n ; n ] where R̂p = world point - estimated body position.
Vector6d residual_jacobian(const Eigen::Vector3d& point_world, const Eigen::Vector3d& normal,
                           const Pose& body_pose);

/// Λ = Σ J Jᵀ + damping·I, u = trace(weight · Λ⁻¹).
ObservabilityResult a_optimal_u(const OrientedPoints& scan, const Pose& body_pose, double damping,
                                const Matrix6d& weight = Matrix6d::Identity());

}  // namespace aeos
