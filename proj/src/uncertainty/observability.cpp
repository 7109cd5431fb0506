#include "aeos/uncertainty/observability.hpp"

#include <Eigen/Cholesky>
#include <array>
#include <cmath>
#include <numbers>

#include "aeos/common/angles.hpp"
#include "aeos/common/error.hpp"
#include "aeos/simd/kernels.hpp"

namespace aeos {

bool pano_column_in_window(int u, int width, double angle, double fov_h) {
  if (fov_h >= kTwoPi) return true;
  const double az = (u + 0.5) / width * kTwoPi;
  return std::abs(wrap_pi(az - angle)) <= fov_h / 2.0;
}

bool pano_row_in_window(int v, int height, double fov_v) {
  const double elevation = std::numbers::pi / 2.0 - (v + 0.5) / height * std::numbers::pi;
  return std::abs(elevation) <= fov_v / 2.0;
}

Eigen::Vector3d pano_pixel_normal(const PanoDepthMap& pano, int u, int v) {
  const int w = pano.width(), h = pano.height();
  const double r = pano.at(u, v);
  const Eigen::Vector3d dir = pano_bin_direction(u, v, w, h);
  const Eigen::Vector3d p = dir * r;
  constexpr double kJump = 0.2;  // relative range change treated as an edge
  auto neighbour = [&](int uu, int vv, Eigen::Vector3d& out) {
    if (vv < 0 || vv >= h) return false;
    uu = (uu + w) % w;
    const double rr = pano.at(uu, vv);
    if (rr == PanoDepthMap::kNoReturn || std::abs(rr - r) > kJump * r) return false;
    out = pano_bin_direction(uu, vv, w, h) * rr;
    return true;
  };
  auto tangent = [&](int du, int dv, Eigen::Vector3d& out) {
    Eigen::Vector3d a, b;
    const bool fa = neighbour(u + du, v + dv, a), fb = neighbour(u - du, v - dv, b);
    if (fa && fb) out = a - b;
    else if (fa) out = a - p;
    else if (fb) out = p - b;
    else return false;
    return true;
  };
  Eigen::Vector3d tu, tv;
  if (tangent(1, 0, tu) && tangent(0, 1, tv)) {
    Eigen::Vector3d n = tu.cross(tv);
    const double len = n.norm();
    if (len > 1e-12) {
      n /= len;
      return n.dot(dir) > 0.0 ? Eigen::Vector3d(-n) : n;
    }
  }
  return -dir;
}

OrientedPoints predict_scan(const PanoDepthMap& pano, double angle, const SensorModel& sensor,
                            const Pose& body_pose) {
  OrientedPoints out;
  const int w = pano.width(), h = pano.height();
  for (int u = 0; u < w; ++u) {
    if (!pano_column_in_window(u, w, angle, sensor.fov_h)) continue;
    for (int v = 0; v < h; ++v) {
      if (!pano_row_in_window(v, h, sensor.fov_v) || !pano.has_return(u, v)) continue;
      const Eigen::Vector3d pb = pano_bin_direction(u, v, w, h) * pano.at(u, v);
      out.points.push_back(body_pose * pb);
      out.normals.push_back(body_pose.rotation() * pano_pixel_normal(pano, u, v));
    }
  }
  return out;
}

Vector6d residual_jacobian(const Eigen::Vector3d& point_world, const Eigen::Vector3d& normal,
                           const Pose& body_pose) {
  if (std::abs(normal.norm() - 1.0) > 1e-6) throw InputError("residual_jacobian: normal must be unit");
  Vector6d j;
  j << (point_world - body_pose.translation()).cross(normal), normal;
  return j;
}

ObservabilityResult a_optimal_u(const OrientedPoints& scan, const Pose& body_pose, double damping,
                                const Matrix6d& weight) {
  if (scan.points.size() != scan.normals.size()) throw InputError("a_optimal_u: point/normal count mismatch");
  if (!(damping >= 0.0)) throw InputError("a_optimal_u: damping must be >= 0");
  const std::size_t m = scan.size();
  // Jacobian components as six contiguous columns.
  std::array<std::vector<double>, 6> cols;
  for (auto& c : cols) c.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Vector6d j = residual_jacobian(scan.points[i], scan.normals[i], body_pose);
    for (int a = 0; a < 6; ++a) cols[a][i] = j[a];
  }
  ObservabilityResult res;
  res.point_count = m;
  for (int a = 0; a < 6; ++a) {
    for (int b = a; b < 6; ++b) {
      const double s = simd::dot(cols[a], cols[b]);
      res.info(a, b) = s;
      res.info(b, a) = s;
    }
    res.info(a, a) += damping;
  }
  const Matrix6d inv = res.info.ldlt().solve(Matrix6d::Identity());
  res.u_value = (weight * inv).trace();
  return res;
}

}  // namespace aeos
