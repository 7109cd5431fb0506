#include "aeos/geometry/trajectory.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "aeos/common/error.hpp"

namespace aeos {

Trajectory::Trajectory(std::vector<StampedPose> poses) : poses_(std::move(poses)) {
  for (std::size_t i = 1; i < poses_.size(); ++i) {
    if (!(poses_[i].time > poses_[i - 1].time)) {
      throw InputError("Trajectory: timestamps must be strictly increasing");
    }
  }
}

double Trajectory::t_first() const {
  if (empty()) throw OutOfRangeError("empty trajectory");
  return poses_.front().time;
}

double Trajectory::t_last() const {
  if (empty()) throw OutOfRangeError("empty trajectory");
  return poses_.back().time;
}

void Trajectory::push_back(double t, const Pose& pose) {
  if (!poses_.empty() && !(t > poses_.back().time)) {
    throw InputError("Trajectory: timestamps must be strictly increasing");
  }
  poses_.push_back({t, pose});
}

Pose Trajectory::at(double t) const {
  if (empty() || !(t >= t_first()) || !(t <= t_last())) {
    throw OutOfRangeError("trajectory query outside [t_first, t_last]");
  }
  const auto it = std::lower_bound(poses_.begin(), poses_.end(), t,
                                   [](const StampedPose& s, double v) { return s.time < v; });
  if (it->time == t) return it->pose;
  const StampedPose& b = *it;
  const StampedPose& a = *(it - 1);
  const double s = (t - a.time) / (b.time - a.time);
  const Eigen::Quaterniond qa = a.pose.quaternion();
  const Eigen::Quaterniond qb = b.pose.quaternion();
  const Eigen::Vector3d tr = (1.0 - s) * a.pose.translation() + s * b.pose.translation();
  return Pose::from_quaternion(qa.slerp(s, qb), tr);
}

Trajectory load_tum(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open TUM file: " + path.string());
  std::vector<StampedPose> poses;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ls(line);
    double t, x, y, z, qx, qy, qz, qw;
    if (!(ls >> t >> x >> y >> z >> qx >> qy >> qz >> qw)) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected 8 fields");
    }
    poses.push_back({t, Pose::from_quaternion(Eigen::Quaterniond(qw, qx, qy, qz), {x, y, z})});
  }
  return Trajectory(std::move(poses));
}

void save_tum(const std::filesystem::path& path, const Trajectory& trajectory) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw IoError("cannot write TUM file: " + path.string());
  for (const auto& sp : trajectory.poses()) {
    Eigen::Quaterniond q = sp.pose.quaternion();
    if (q.w() < 0.0) q.coeffs() = -q.coeffs();
    const Eigen::Vector3d& t = sp.pose.translation();
    std::fprintf(f, "%.6f %.9f %.9f %.9f %.9f %.9f %.9f %.9f\n", sp.time, t.x(), t.y(), t.z(),
                 q.x(), q.y(), q.z(), q.w());
  }
  std::fclose(f);
}

}  // namespace aeos
