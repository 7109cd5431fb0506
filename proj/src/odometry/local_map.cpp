#include "aeos/odometry/local_map.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "aeos/common/error.hpp"

namespace aeos {

LocalMap::LocalMap(const LocalMapConfig& config)
    : config_(config),
      coarse_cell_(2.0 * std::max(config.max_match_dist, 0.5 * config.normal_radius)) {
  if (!(config.window > 0.0) || !(config.voxel > 0.0) || !(config.max_match_dist > 0.0) ||
      config.normal_k < 3 || !(config.normal_radius > 0.0)) {
    throw ConfigError("local map: invalid configuration");
  }
}

void LocalMap::insert(std::span<const Eigen::Vector3d> world_points, double time) {
  std::vector<std::uint32_t> batch;
  std::vector<std::uint32_t> fresh;
  for (const auto& p : world_points) {
    const VoxelKey fk = voxel_key(p, config_.voxel);
    const auto it = fine_.find(fk);
    if (it != fine_.end()) {
      entries_[it->second].time = time;
      batch.push_back(it->second);
      continue;
    }
    std::uint32_t id;
    if (!free_.empty()) {
      id = free_.back();
      free_.pop_back();
    } else {
      id = static_cast<std::uint32_t>(entries_.size());
      entries_.emplace_back();
    }
    entries_[id] = Entry{p, Eigen::Vector3d::UnitZ(), time, 0, 0, false, true};
    fine_.emplace(fk, id);
    coarse_[coarse_key(p)].push_back(id);
    batch.push_back(id);
    fresh.push_back(id);
    ++live_;
  }
  ++revision_;
  for (auto id : fresh) refresh_normal(id);
  if (!batch.empty()) batches_.emplace_back(time, std::move(batch));
}

void LocalMap::trim(double now) {
  const double cutoff = now - config_.window;
  while (!batches_.empty() && batches_.front().first < cutoff) {
    for (auto id : batches_.front().second) {
      Entry& e = entries_[id];
      // Refreshed entries belong to a later batch.
      if (!e.alive || e.time >= cutoff) continue;
      e.alive = false;
      fine_.erase(voxel_key(e.p, config_.voxel));
      auto& cell = coarse_[coarse_key(e.p)];
      cell.erase(std::find(cell.begin(), cell.end(), id));
      if (cell.empty()) coarse_.erase(coarse_key(e.p));
      free_.push_back(id);
      --live_;
    }
    batches_.pop_front();
  }
  ++revision_;
}

void LocalMap::refresh_normal(std::uint32_t id) {
  Entry& e = entries_[id];
  const double r2 = config_.normal_radius * config_.normal_radius;
  const auto k = static_cast<std::size_t>(config_.normal_k);
  std::vector<std::pair<double, std::uint32_t>> cand;
  const Eigen::Vector3d ext = Eigen::Vector3d::Constant(config_.normal_radius);
  const VoxelKey lo = coarse_key(e.p - ext), hi = coarse_key(e.p + ext);
  for (int x = lo.x; x <= hi.x; ++x) {
    for (int y = lo.y; y <= hi.y; ++y) {
      for (int z = lo.z; z <= hi.z; ++z) {
        const auto it = coarse_.find({x, y, z});
        if (it == coarse_.end()) continue;
        for (auto j : it->second) {
          const double d2 = (entries_[j].p - e.p).squaredNorm();
          if (d2 <= r2) cand.emplace_back(d2, j);
        }
      }
    }
  }
  const std::size_t m = std::min(k, cand.size());
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(m), cand.end());
  e.support = static_cast<int>(m);
  e.normal_revision = revision_;
  e.planar = false;
  if (m < 5) return;
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < m; ++i) mean += entries_[cand[i].second].p;
  mean /= static_cast<double>(m);
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::Vector3d d = entries_[cand[i].second].p - mean;
    cov.noalias() += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es;
  es.computeDirect(cov);
  const auto& ev = es.eigenvalues();
  e.n = es.eigenvectors().col(0).normalized();
  e.planar = ev(1) > 0.0 && ev(0) < config_.planarity * ev(1);
  for (std::size_t i = 0; i < m && e.planar; ++i) {
    e.planar = std::abs(e.n.dot(entries_[cand[i].second].p - mean)) <= config_.plane_tolerance;
  }
}

std::optional<LocalMap::Match> LocalMap::nearest_plane(const Eigen::Vector3d& q) {
  const double r = config_.max_match_dist;
  const Eigen::Vector3d ext = Eigen::Vector3d::Constant(r);
  const VoxelKey lo = coarse_key(q - ext), hi = coarse_key(q + ext);
  double best = r * r;
  std::int64_t best_id = -1;
  for (int x = lo.x; x <= hi.x; ++x) {
    for (int y = lo.y; y <= hi.y; ++y) {
      for (int z = lo.z; z <= hi.z; ++z) {
        const auto it = coarse_.find({x, y, z});
        if (it == coarse_.end()) continue;
        for (auto j : it->second) {
          const double d2 = (entries_[j].p - q).squaredNorm();
          if (d2 < best || (d2 == best && j < best_id)) {
            best = d2;
            best_id = j;
          }
        }
      }
    }
  }
  if (best_id < 0) return std::nullopt;
  const auto id = static_cast<std::uint32_t>(best_id);
  if (entries_[id].support < config_.normal_k && entries_[id].normal_revision < revision_) {
    refresh_normal(id);
  }
  const Entry& e = entries_[id];
  if (!e.planar) return std::nullopt;
  return Match{e.p, e.n, best};
}

std::vector<Eigen::Vector3d> LocalMap::points() const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(live_);
  for (const auto& e : entries_) {
    if (e.alive) out.push_back(e.p);
  }
  return out;
}

}  // namespace aeos
