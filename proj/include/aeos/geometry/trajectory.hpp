#pragma once

#include <filesystem>
#include <vector>

#include "aeos/geometry/pose.hpp"

namespace aeos {

struct StampedPose {
  double time = 0.0;
  Pose pose;
};

/// Time-sorted pose sequence with SE(3) interpolation (linear translation,
/// slerp rotation).
class Trajectory {
 public:
  Trajectory() = default;
  /// Throws InputError if timestamps are not strictly increasing.
  explicit Trajectory(std::vector<StampedPose> poses);

  const std::vector<StampedPose>& poses() const { return poses_; }
  std::size_t size() const { return poses_.size(); }
  bool empty() const { return poses_.empty(); }
  double t_first() const;
  double t_last() const;
  double duration() const { return empty() ? 0.0 : t_last() - t_first(); }

  /// Throws OutOfRangeError outside [t_first, t_last].
  Pose at(double t) const;

  void push_back(double t, const Pose& pose);

 private:
  std::vector<StampedPose> poses_;
};

/// `timestamp tx ty tz qx qy qz qw` per line; '#' starts a comment.
Trajectory load_tum(const std::filesystem::path& path);
void save_tum(const std::filesystem::path& path, const Trajectory& trajectory);

}  // namespace aeos
