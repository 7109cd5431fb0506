#include "aeos/odometry/metrics.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <optional>

#include "aeos/common/error.hpp"

namespace aeos {
namespace {

std::optional<std::size_t> nearest_index(const Trajectory& tr, double t, double tol) {
  const auto& ps = tr.poses();
  if (ps.empty()) return std::nullopt;
  const auto it = std::lower_bound(ps.begin(), ps.end(), t,
                                   [](const StampedPose& p, double v) { return p.time < v; });
  std::optional<std::size_t> best;
  double best_dt = tol;
  auto consider = [&](std::vector<StampedPose>::const_iterator c) {
    const double dt = std::abs(c->time - t);
    if (dt <= best_dt) {
      best_dt = dt;
      best = static_cast<std::size_t>(c - ps.begin());
    }
  };
  if (it != ps.end()) consider(it);
  if (it != ps.begin()) consider(std::prev(it));
  return best;
}

}  // namespace

double compute_ape(const Trajectory& estimate, const Trajectory& truth, const ApeOptions& options) {
  std::vector<Eigen::Vector3d> est, ref;
  for (const auto& sp : estimate.poses()) {
    if (const auto j = nearest_index(truth, sp.time, options.match_tolerance)) {
      est.push_back(sp.pose.translation());
      ref.push_back(truth.poses()[*j].pose.translation());
    }
  }
  if (est.size() < 2) throw InputError("APE needs at least two matched poses");
  const auto n = static_cast<Eigen::Index>(est.size());
  Eigen::Matrix3Xd a(3, n), b(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.col(i) = est[static_cast<std::size_t>(i)];
    b.col(i) = ref[static_cast<std::size_t>(i)];
  }
  if (options.align) {
    const Eigen::Matrix4d t = Eigen::umeyama(a, b, false);
    a = (t.topLeftCorner<3, 3>() * a).colwise() + t.topRightCorner<3, 1>();
  }
  return std::sqrt((a - b).colwise().squaredNorm().mean());
}

double compute_rte(const Trajectory& estimate, const Trajectory& truth, double t, double tau,
                   double match_tolerance) {
  if (!(tau > 0.0)) throw InputError("RTE window must be positive");
  const double t0 = t - tau;
  for (const Trajectory* tr : {&estimate, &truth}) {
    if (tr->empty() || tr->t_first() > t0 + match_tolerance || tr->t_last() < t - match_tolerance) {
      throw OutOfRangeError("RTE window not covered by trajectory");
    }
  }
  const auto& ps = estimate.poses();
  const auto lo = std::lower_bound(ps.begin(), ps.end(), t0 - match_tolerance,
                                   [](const StampedPose& p, double v) { return p.time < v; });
  double sum = 0.0;
  int count = 0;
  std::optional<std::pair<std::size_t, std::size_t>> prev;  // (estimate, truth)
  for (auto it = lo; it != ps.end() && it->time <= t + match_tolerance; ++it) {
    const auto j = nearest_index(truth, it->time, match_tolerance);
    if (!j) continue;
    const auto i = static_cast<std::size_t>(it - ps.begin());
    if (prev) {
      const Pose& e0 = ps[prev->first].pose;
      const Pose& e1 = ps[i].pose;
      const Pose& g0 = truth.poses()[prev->second].pose;
      const Pose& g1 = truth.poses()[*j].pose;
      const Eigen::Vector3d de = e0.rotation().transpose() * (e1.translation() - e0.translation());
      const Eigen::Vector3d dg = g0.rotation().transpose() * (g1.translation() - g0.translation());
      sum += (dg - de).norm();
      ++count;
    }
    prev = std::pair{i, *j};
  }
  if (count == 0) throw OutOfRangeError("RTE window holds fewer than two matched poses");
  return sum / count;
}

}  // namespace aeos
