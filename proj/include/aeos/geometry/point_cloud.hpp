#pragma once

#include <Eigen/Core>
#include <string_view>
#include <vector>

#include "aeos/geometry/pose.hpp"

namespace aeos {

enum class Frame { kWorld, kBody, kLidar };

std::string_view frame_name(Frame f);

/// Points tagged with the frame they are expressed in. The tag is fixed at
/// construction; all coordinates are finite.
class PointCloud {
 public:
  explicit PointCloud(Frame frame) : frame_(frame) {}
  PointCloud(Frame frame, std::vector<Eigen::Vector3d> points);

  Frame frame() const { return frame_; }
  const std::vector<Eigen::Vector3d>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  const Eigen::Vector3d& operator[](std::size_t i) const { return points_[i]; }

  void push_back(const Eigen::Vector3d& p);
  void reserve(std::size_t n) { points_.reserve(n); }

  /// Applies `pose` to every point and retags the result as `target`.
  PointCloud transformed(const Pose& pose, Frame target) const;

 private:
  Frame frame_;
  std::vector<Eigen::Vector3d> points_;
};

}  // namespace aeos
