#include "aeos/scansim/scenes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "aeos/common/error.hpp"
#include "aeos/common/rng.hpp"

namespace aeos {
namespace {

constexpr double kPi = std::numbers::pi;

struct Surfaces {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;

  void add(const Eigen::Vector3d& p, const Eigen::Vector3d& n) {
    points.push_back(p);
    normals.push_back(n.normalized());
  }

  /// Axis-aligned rectangle on the plane `axis = offset`, spanning [a0,a1] x
  /// [b0,b1] on the two remaining axes (in increasing axis order). `keep`
  /// filters out apertures.
  void rect(int axis, double offset, double a0, double a1, double b0, double b1,
            double pitch, double normal_sign,
            const std::function<bool(double, double)>& keep = {}) {
    const int ia = axis == 0 ? 1 : 0;
    const int ib = axis == 2 ? 1 : 2;
    const int na = std::max(1, static_cast<int>(std::round((a1 - a0) / pitch)));
    const int nb = std::max(1, static_cast<int>(std::round((b1 - b0) / pitch)));
    Eigen::Vector3d n = Eigen::Vector3d::Zero();
    n[axis] = normal_sign;
    for (int i = 0; i <= na; ++i) {
      const double a = a0 + (a1 - a0) * i / na;
      for (int j = 0; j <= nb; ++j) {
        const double b = b0 + (b1 - b0) * j / nb;
        if (keep && !keep(a, b)) continue;
        Eigen::Vector3d p;
        p[axis] = offset;
        p[ia] = a;
        p[ib] = b;
        add(p, n);
      }
    }
  }

  /// Vertical cylinder surface, normals pointing outward.
  void cylinder(double cx, double cy, double radius, double z0, double z1, double pitch) {
    const int nu = std::max(6, static_cast<int>(std::ceil(2.0 * kPi * radius / pitch)));
    const int nz = std::max(1, static_cast<int>(std::round((z1 - z0) / pitch)));
    for (int i = 0; i < nu; ++i) {
      const double a = 2.0 * kPi * i / nu;
      const Eigen::Vector3d n(std::cos(a), std::sin(a), 0.0);
      for (int k = 0; k <= nz; ++k) {
        add({cx + radius * n.x(), cy + radius * n.y(), z0 + (z1 - z0) * k / nz}, n);
      }
    }
  }

  /// Closed axis-aligned box (all six faces).
  void box(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, double pitch) {
    rect(0, lo.x(), lo.y(), hi.y(), lo.z(), hi.z(), pitch, -1.0);
    rect(0, hi.x(), lo.y(), hi.y(), lo.z(), hi.z(), pitch, 1.0);
    rect(1, lo.y(), lo.x(), hi.x(), lo.z(), hi.z(), pitch, -1.0);
    rect(1, hi.y(), lo.x(), hi.x(), lo.z(), hi.z(), pitch, 1.0);
    rect(2, lo.z(), lo.x(), hi.x(), lo.y(), hi.y(), pitch, -1.0);
    rect(2, hi.z(), lo.x(), hi.x(), lo.y(), hi.y(), pitch, 1.0);
  }

  WorldMap build(const WorldMapOptions& options) {
    return WorldMap(PointCloud(Frame::kWorld, std::move(points)), std::move(normals), options);
  }
};

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("scene: ") + what + " must be positive");
}

Scene tunnel(std::uint64_t seed, const SceneParams& p) {
  require_positive(p.tunnel_length, "tunnel_length");
  require_positive(p.tunnel_width, "tunnel_width");
  require_positive(p.tunnel_height, "tunnel_height");
  require_positive(p.pillar_spacing, "pillar_spacing");
  if (p.flight_height >= p.tunnel_height) throw ConfigError("scene: flight height above tunnel ceiling");
  Rng rng(seed);
  const double L = p.tunnel_length, hw = p.tunnel_width / 2.0, h = p.tunnel_height;
  const double margin = 3.0;
  const double x0 = -margin, x1 = L + margin;
  const double amp = p.texture_amplitude;

  // Wall relief: a sum of two random sinusoids per wall.
  struct Relief {
    double kx[2], kz[2], phase[2];
  };
  auto make_relief = [&] {
    Relief r{};
    for (int i = 0; i < 2; ++i) {
      r.kx[i] = 2.0 * kPi / rng.uniform(2.0, 6.0);
      r.kz[i] = 2.0 * kPi / rng.uniform(1.5, 4.0);
      r.phase[i] = rng.uniform(0.0, 2.0 * kPi);
    }
    return r;
  };
  const Relief walls[2] = {make_relief(), make_relief()};

  Surfaces s;
  const int nx = static_cast<int>(std::round((x1 - x0) / p.pitch));
  const int nz = static_cast<int>(std::round(h / p.pitch));
  for (int side = 0; side < 2; ++side) {
    const double sign = side == 0 ? 1.0 : -1.0;  // +y wall then -y wall
    const Relief& r = walls[side];
    for (int i = 0; i <= nx; ++i) {
      const double x = x0 + (x1 - x0) * i / nx;
      for (int k = 0; k <= nz; ++k) {
        const double z = h * k / nz;
        double d = 0.0, dx = 0.0, dz = 0.0;
        for (int m = 0; m < 2; ++m) {
          const double sx = std::sin(r.kx[m] * x + r.phase[m]), cx = std::cos(r.kx[m] * x + r.phase[m]);
          const double sz = std::sin(r.kz[m] * z), cz = std::cos(r.kz[m] * z);
          d += 0.5 * amp * sx * sz;
          dx += 0.5 * amp * r.kx[m] * cx * sz;
          dz += 0.5 * amp * r.kz[m] * sx * cz;
        }
        // Wall surface y = sign * (hw + d); inward normal.
        s.add({x, sign * (hw + d), z}, Eigen::Vector3d(sign * dx, -1.0, sign * dz) * sign);
      }
    }
  }
  s.rect(2, 0.0, x0, x1, -hw, hw, p.pitch, 1.0);   // floor
  s.rect(2, h, x0, x1, -hw, hw, p.pitch, -1.0);    // ceiling
  s.rect(0, x0, -hw, hw, 0.0, h, p.pitch, 1.0);    // end caps
  s.rect(0, x1, -hw, hw, 0.0, h, p.pitch, -1.0);

  // Pillars protruding from alternating-at-random walls.
  const double depth = 0.4, half = 0.2;
  for (double x = p.pillar_spacing / 2.0; x < L; x += p.pillar_spacing) {
    const double xc = x + rng.uniform(-1.0, 1.0);
    const double sign = rng.uniform() < 0.5 ? 1.0 : -1.0;
    const double y_in = sign * (hw - depth);
    s.rect(0, xc - half, std::min(y_in, sign * hw), std::max(y_in, sign * hw), 0.0, h, p.pitch, -1.0);
    s.rect(0, xc + half, std::min(y_in, sign * hw), std::max(y_in, sign * hw), 0.0, h, p.pitch, 1.0);
    s.rect(1, y_in, xc - half, xc + half, 0.0, h, p.pitch, -sign);
  }

  // Centreline with a gentle lateral and vertical wiggle.
  const double ay = std::min(0.3, 0.2 * hw), az = std::min(0.15, 0.2 * (h - p.flight_height));
  const double ly = rng.uniform(30.0, 50.0), lz = rng.uniform(20.0, 40.0);
  const double py = rng.uniform(0.0, 2.0 * kPi), pz = rng.uniform(0.0, 2.0 * kPi);
  std::vector<Eigen::Vector3d> path;
  const int n_path = std::max(2, static_cast<int>(std::ceil(L / 0.05)) + 1);
  for (int i = 0; i < n_path; ++i) {
    const double x = L * i / (n_path - 1);
    path.emplace_back(x, ay * std::sin(2.0 * kPi * x / ly + py),
                      p.flight_height + az * std::sin(2.0 * kPi * x / lz + pz));
  }
  return {"tunnel", s.build(p.map), trajectory_along_path(path, p.speed, p.pose_dt)};
}

std::vector<Eigen::Vector3d> circle_laps(double radius, double z, double speed, double duration) {
  const double circumference = 2.0 * kPi * radius;
  const double length = speed * duration;
  const int n = std::max(2, static_cast<int>(std::ceil(length / 0.02)) + 1);
  std::vector<Eigen::Vector3d> path;
  path.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = 2.0 * kPi * (length * i / (n - 1)) / circumference;
    path.emplace_back(radius * std::cos(a), radius * std::sin(a), z);
  }
  return path;
}

Scene room(std::uint64_t seed, const SceneParams& p) {
  require_positive(p.room_size, "room_size");
  require_positive(p.room_height, "room_height");
  require_positive(p.lap_radius, "lap_radius");
  require_positive(p.duration, "duration");
  const double hs = p.room_size / 2.0, h = p.room_height;
  if (p.lap_radius >= hs - 0.5) throw ConfigError("scene: lap radius does not fit in the room");
  if (p.flight_height >= h) throw ConfigError("scene: flight height above room ceiling");
  Rng rng(seed);
  Surfaces s;
  // Door in the +y wall, window in the -x wall.
  const double door_x = rng.uniform(-hs + 1.0, hs - 2.0);
  const double win_y = rng.uniform(-hs + 1.0, hs - 2.5);
  const double door_top = std::min(2.0, 0.8 * h);
  const double win_lo = 0.35 * h, win_hi = 0.7 * h;
  s.rect(0, -hs, -hs, hs, 0.0, h, p.pitch, 1.0, [&](double y, double z) {
    return !(y > win_y && y < win_y + 1.5 && z > win_lo && z < win_hi);
  });
  s.rect(0, hs, -hs, hs, 0.0, h, p.pitch, -1.0);
  s.rect(1, -hs, -hs, hs, 0.0, h, p.pitch, 1.0);
  s.rect(1, hs, -hs, hs, 0.0, h, p.pitch, -1.0, [&](double x, double z) {
    return !(x > door_x && x < door_x + 1.0 && z < door_top);
  });
  s.rect(2, 0.0, -hs, hs, -hs, hs, p.pitch, 1.0);
  s.rect(2, h, -hs, hs, -hs, hs, p.pitch, -1.0);

  // Clutter: boxes in the corners band, clear of the flight circle.
  for (int b = 0; b < p.clutter_boxes; ++b) {
    for (int attempt = 0; attempt < 50; ++attempt) {
      const Eigen::Vector3d size(rng.uniform(0.4, 1.2), rng.uniform(0.4, 1.2), rng.uniform(0.5, 0.9 * h));
      const Eigen::Vector3d lo(rng.uniform(-hs + 0.1, hs - 0.1 - size.x()),
                               rng.uniform(-hs + 0.1, hs - 0.1 - size.y()), 0.0);
      const Eigen::Vector2d c(lo.x() + size.x() / 2.0, lo.y() + size.y() / 2.0);
      const double reach = 0.5 * size.head<2>().norm() + 0.6;
      if (std::abs(c.norm() - p.lap_radius) < reach) continue;
      s.box(lo, lo + size, p.pitch);
      break;
    }
  }
  auto path = circle_laps(p.lap_radius, p.flight_height, p.speed, p.duration);
  return {"room", s.build(p.map), trajectory_along_path(path, p.speed, p.pose_dt)};
}

Scene forest(std::uint64_t seed, const SceneParams& p) {
  require_positive(p.forest_extent, "forest_extent");
  require_positive(p.forest_path_radius, "forest_path_radius");
  require_positive(p.duration, "duration");
  if (p.forest_density < 0.0) throw ConfigError("scene: forest_density must be >= 0");
  const double he = p.forest_extent / 2.0;
  if (p.forest_path_radius >= he) throw ConfigError("scene: path radius does not fit in the forest");
  Rng rng(seed);
  Surfaces s;
  s.rect(2, 0.0, -he, he, -he, he, p.pitch, 1.0);
  const auto n_trees = static_cast<int>(std::round(p.forest_density * p.forest_extent * p.forest_extent));
  for (int i = 0; i < n_trees; ++i) {
    const double r = rng.uniform(0.12, 0.3);
    const double x = rng.uniform(-he + r, he - r), y = rng.uniform(-he + r, he - r);
    if (std::abs(std::hypot(x, y) - p.forest_path_radius) < r + 1.5) continue;
    s.cylinder(x, y, r, 0.0, rng.uniform(4.0, 7.0), p.pitch);
  }
  auto path = circle_laps(p.forest_path_radius, p.flight_height, p.speed, p.duration);
  return {"forest", s.build(p.map), trajectory_along_path(path, p.speed, p.pose_dt)};
}

}  // namespace

SceneKind parse_scene_kind(std::string_view name) {
  if (name == "tunnel") return SceneKind::kTunnel;
  if (name == "room") return SceneKind::kRoom;
  if (name == "forest") return SceneKind::kForest;
  throw ConfigError("unknown scene '" + std::string(name) + "'");
}

std::string_view scene_kind_name(SceneKind kind) {
  switch (kind) {
    case SceneKind::kTunnel: return "tunnel";
    case SceneKind::kRoom: return "room";
    case SceneKind::kForest: return "forest";
  }
  return "?";
}

WorldMap make_box_map(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, double pitch,
                      const WorldMapOptions& options) {
  require_positive(pitch, "pitch");
  if (!((hi - lo).array() > 0.0).all()) throw ConfigError("box map: degenerate dimensions");
  Surfaces s;
  s.box(lo, hi, pitch);
  for (auto& n : s.normals) n = -n;
  return s.build(options);
}

Trajectory trajectory_along_path(const std::vector<Eigen::Vector3d>& path, double speed,
                                 double pose_dt) {
  require_positive(speed, "speed");
  require_positive(pose_dt, "pose_dt");
  if (path.size() < 2) throw ConfigError("scene: path needs at least two points");
  std::vector<double> s(path.size(), 0.0);
  for (std::size_t i = 1; i < path.size(); ++i) s[i] = s[i - 1] + (path[i] - path[i - 1]).norm();
  const double total = s.back();
  require_positive(total, "path length");
  const double duration = total / speed;

  auto sample = [&](double arc) {
    const auto it = std::upper_bound(s.begin(), s.end(), arc);
    std::size_t j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(it - s.begin(), 1, static_cast<std::ptrdiff_t>(s.size() - 1)));
    const double seg = s[j] - s[j - 1];
    const double a = seg > 0.0 ? std::clamp((arc - s[j - 1]) / seg, 0.0, 1.0) : 0.0;
    const Eigen::Vector3d pos = path[j - 1] + a * (path[j] - path[j - 1]);
    const Eigen::Vector3d tangent = path[j] - path[j - 1];
    return std::pair{pos, std::atan2(tangent.y(), tangent.x())};
  };

  std::vector<StampedPose> poses;
  const auto n = static_cast<std::size_t>(std::floor(duration / pose_dt + 1e-9));
  poses.reserve(n + 2);
  for (std::size_t k = 0; k <= n; ++k) {
    const double t = static_cast<double>(k) * pose_dt;
    const auto [pos, yaw] = sample(std::min(total, t * speed));
    poses.push_back({t, Pose(rot_z(yaw), pos)});
  }
  if (duration - poses.back().time > 1e-9) {
    const auto [pos, yaw] = sample(total);
    poses.push_back({duration, Pose(rot_z(yaw), pos)});
  }
  return Trajectory(std::move(poses));
}

Scene generate_synthetic_scene(SceneKind kind, std::uint64_t seed, const SceneParams& params) {
  require_positive(params.pitch, "pitch");
  switch (kind) {
    case SceneKind::kTunnel: return tunnel(seed, params);
    case SceneKind::kRoom: return room(seed, params);
    case SceneKind::kForest: return forest(seed, params);
  }
  throw ConfigError("unknown scene kind");
}

}  // namespace aeos
