#include "aeos/geometry/point_cloud.hpp"

#include "aeos/common/error.hpp"

namespace aeos {

std::string_view frame_name(Frame f) {
  switch (f) {
    case Frame::kWorld: return "world";
    case Frame::kBody: return "body";
    case Frame::kLidar: return "lidar";
  }
  return "?";
}

PointCloud::PointCloud(Frame frame, std::vector<Eigen::Vector3d> points)
    : frame_(frame), points_(std::move(points)) {
  for (const auto& p : points_) {
    if (!p.allFinite()) throw InputError("PointCloud: non-finite coordinate");
  }
}

void PointCloud::push_back(const Eigen::Vector3d& p) {
  if (!p.allFinite()) throw InputError("PointCloud: non-finite coordinate");
  points_.push_back(p);
}

PointCloud PointCloud::transformed(const Pose& pose, Frame target) const {
  PointCloud out(target);
  out.points_.reserve(points_.size());
  for (const auto& p : points_) out.points_.push_back(pose * p);
  return out;
}

}  // namespace aeos
