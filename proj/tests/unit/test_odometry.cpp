#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "aeos/common/error.hpp"
#include "aeos/odometry/metrics.hpp"
#include "aeos/odometry/registration.hpp"
#include "aeos/scansim/raycast.hpp"
#include "aeos/scansim/scenes.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace aeos;
using std::numbers::pi;

namespace {

// Three mutually orthogonal 2 m patches meeting near the origin.
std::vector<Eigen::Vector3d> three_planes(int per_side = 20) {
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < per_side; ++i) {
    for (int j = 0; j < per_side; ++j) {
      const double a = 0.05 + 0.1 * i, b = 0.05 + 0.1 * j;
      pts.emplace_back(0.0, a, b);
      pts.emplace_back(a, 0.0, b);
      pts.emplace_back(a, b, 0.0);
    }
  }
  return pts;
}

std::vector<Eigen::Vector3d> one_plane(std::size_t count) {
  std::vector<Eigen::Vector3d> pts;
  const int side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(count))));
  for (int i = 0; i < side && pts.size() < count; ++i) {
    for (int j = 0; j < side && pts.size() < count; ++j) {
      pts.emplace_back(-1.0 + 0.1 * i, -1.0 + 0.1 * j, 0.0);
    }
  }
  return pts;
}

std::vector<Eigen::Vector3d> to_body(const std::vector<Eigen::Vector3d>& world, const Pose& body) {
  const Pose inv = body.inverse();
  std::vector<Eigen::Vector3d> out;
  for (const auto& p : world) out.push_back(inv * p);
  return out;
}

LocalMap map_of(const std::vector<Eigen::Vector3d>& world) {
  LocalMap m;
  m.insert(world, 0.0);
  return m;
}

bool is_psd_symmetric(const Matrix6d& s) {
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-12) return false;
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(s);
  return es.eigenvalues().minCoeff() >= -1e-12;
}

}  // namespace

TEST_CASE("self-registration is a fixed point and shrinks covariance") {
  const auto world = three_planes();
  LocalMap map = map_of(world);
  const Pose truth(rot_z(0.3), Eigen::Vector3d(0.2, -0.1, 0.05));
  const Matrix6d prior_cov = Matrix6d::Identity() * 1e-2;
  const auto res = register_scan(map, to_body(world, truth), truth, prior_cov, {});
  CHECK((res.pose.translation() - truth.translation()).norm() < 1e-9);
  CHECK(so3_log(res.pose.rotation() * truth.rotation().transpose()).norm() < 1e-9);
  CHECK(res.covariance.trace() < prior_cov.trace());
  CHECK(is_psd_symmetric(res.covariance));
}

TEST_CASE("three planes recover a 5 cm prior offset to 1 mm") {
  const auto world = three_planes();
  Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    LocalMap map = map_of(world);
    const Pose truth(rot_z(rng.uniform(-0.5, 0.5)), testing::random_vec(rng, 0.3));
    const Pose prior(truth.rotation(), truth.translation() + 0.05 * testing::random_unit(rng));
    RegistrationConfig cfg;
    cfg.record_iterates = true;
    const auto res = register_scan(map, to_body(world, truth), prior, Matrix6d::Identity() * 1e6, cfg);
    CHECK((res.pose.translation() - truth.translation()).norm() < 1e-3);
    // Error never grows across iterations (noise-free scan).
    double last = (prior.translation() - truth.translation()).norm();
    for (const auto& p : res.iterates) {
      const double err = (p.translation() - truth.translation()).norm();
      CHECK(err <= last + 1e-9);
      last = err;
    }
  }
}

TEST_CASE("single plane leaves in-plane directions unconstrained") {
  const auto world = one_plane(400);
  LocalMap map = map_of(world);
  const auto res = register_scan(map, world, Pose::identity(), Matrix6d::Identity(), {});
  const Eigen::Matrix3d st = res.covariance.bottomRightCorner<3, 3>();
  const double normal = st(2, 2);
  CHECK(st(0, 0) >= 100.0 * normal);
  CHECK(st(1, 1) >= 100.0 * normal);
  CHECK(is_psd_symmetric(res.covariance));

  // Richer geometry at equal point count: trace drops.
  const auto rich = three_planes(12);  // 432 points
  const auto flat = one_plane(rich.size());
  LocalMap m3 = map_of(rich), m1 = map_of(flat);
  const auto r3 = register_scan(m3, rich, Pose::identity(), Matrix6d::Identity(), {});
  const auto r1 = register_scan(m1, flat, Pose::identity(), Matrix6d::Identity(), {});
  CHECK(r3.covariance.trace() * 10.0 <= r1.covariance.trace());
}

TEST_CASE("too few correspondences is degenerate") {
  LocalMap map = map_of(three_planes());
  std::vector<Eigen::Vector3d> far{{10, 10, 10}, {11, 10, 10}};
  CHECK_THROWS_AS(register_scan(map, far, Pose::identity(), Matrix6d::Identity(), {}),
                  DegenerateRegistration);
}

TEST_CASE("local map window and voxel downsampling") {
  LocalMap map;
  const std::vector<Eigen::Vector3d> pts{{0.01, 0.01, 0.01}, {0.02, 0.02, 0.02}, {1.0, 1.0, 1.0}};
  map.insert(pts, 0.0);
  CHECK(map.size() == 2);
  map.insert(std::vector<Eigen::Vector3d>{{1.0, 1.0, 1.0}}, 4.0);
  map.trim(6.0);  // the first voxel is older than 5 s, the second was refreshed
  CHECK(map.size() == 1);
  map.trim(10.0);
  CHECK(map.empty());
}

TEST_CASE("odometry tracks a room flight with a noisy prior") {
  SceneParams p;
  p.duration = 20.0;
  const Scene sc = generate_synthetic_scene(SceneKind::kRoom, 3, p);
  SensorModel sensor;
  OdometryConfig cfg;
  Rng rng(8);
  const double dt = 0.1;
  Pose truth_prev = sc.trajectory.at(0.0);
  Odometry odo(cfg, truth_prev);
  FrameChain chain;
  double theta = 0.0;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const double t = k * dt;
    const Pose truth = sc.trajectory.at(t);
    theta += 2.0 * dt;
    chain = chain.with_angle(theta);
    const auto scan = raycast_scan(sc.map, sensor, truth * chain.lidar_in_body(), &rng);
    const Pose rel = truth_prev.inverse() * truth;
    const Pose noisy = rel.boxplus(0.002 * testing::random_vec(rng), 0.02 * testing::random_vec(rng));
    const auto u = odo.update(scan, chain, odo.pose() * noisy, t);
    if (k > 0) CHECK(u.status == UpdateStatus::kRegistered);
    CHECK(is_psd_symmetric(odo.covariance()));
    worst = std::max(worst, (odo.pose().translation() - truth.translation()).norm());
    truth_prev = truth;
  }
  CHECK(worst < 0.1);
}

TEST_CASE("APE examples") {
  Trajectory truth, shifted;
  Rng rng(4);
  for (int i = 0; i < 5; ++i) {
    const Pose p(rot_z(0.1 * i), testing::random_vec(rng, 3.0));
    truth.push_back(0.1 * i, p);
    shifted.push_back(0.1 * i, Pose(p.rotation(), p.translation() + Eigen::Vector3d::UnitX()));
  }
  CHECK(compute_ape(truth, truth) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(compute_ape(shifted, truth, {false, 0.05}) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(compute_ape(shifted, truth, {true, 0.05}) < 1e-9);

  // Hand-computed RMSE on random offsets.
  Trajectory noisy;
  double sum = 0.0;
  for (const auto& sp : truth.poses()) {
    const Eigen::Vector3d d = testing::random_vec(rng, 0.5);
    sum += d.squaredNorm();
    noisy.push_back(sp.time, Pose(sp.pose.rotation(), sp.pose.translation() + d));
  }
  CHECK(std::abs(compute_ape(noisy, truth, {false, 0.05}) - std::sqrt(sum / 5.0)) < 1e-12);

  // A rigidly moved estimate aligns back to zero.
  const Pose g(so3_exp(Eigen::Vector3d(0.1, -0.2, 0.3)), Eigen::Vector3d(4, 5, 6));
  Trajectory moved;
  for (const auto& sp : truth.poses()) moved.push_back(sp.time, g * sp.pose);
  CHECK(compute_ape(moved, truth) < 1e-9);

  Trajectory one;
  one.push_back(0.0, Pose::identity());
  CHECK_THROWS_AS(compute_ape(one, truth), InputError);
}

TEST_CASE("RTE examples") {
  Trajectory truth, est;
  const double d = 0.3, dt = 0.1;
  for (int i = 0; i <= 50; ++i) {
    const double t = i * dt;
    const Eigen::Vector3d pos(std::sin(t), 2.0 * t, 0.1 * t);
    truth.push_back(t, Pose(Eigen::Matrix3d::Identity(), pos));
    est.push_back(t, Pose(Eigen::Matrix3d::Identity(), pos + Eigen::Vector3d(d * t, 0, 0)));
  }
  CHECK(compute_rte(truth, truth, 4.0, 2.0) == doctest::Approx(0.0));
  CHECK(compute_rte(est, truth, 4.0, 2.0) == doctest::Approx(d * dt).epsilon(1e-9));
  CHECK_THROWS_AS(compute_rte(est, truth, 4.0, 10.0), OutOfRangeError);
}
