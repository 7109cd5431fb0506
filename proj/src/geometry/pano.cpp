#include "aeos/geometry/pano.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aeos/common/angles.hpp"
#include "aeos/common/error.hpp"

namespace aeos {

PanoDepthMap::PanoDepthMap(int width, int height, double max_range)
    : width_(width), height_(height), max_range_(max_range) {
  if (width < 1 || height < 1) throw InputError("PanoDepthMap: size must be >= 1");
  if (!(max_range > 0.0)) throw InputError("PanoDepthMap: max_range must be > 0");
  ranges_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                 kNoReturn);
}

void PanoDepthMap::insert(int u, int v, double range) {
  if (u < 0 || u >= width_ || v < 0 || v >= height_) throw InputError("pano pixel out of bounds");
  if (!(range > 0.0) || range > max_range_) throw InputError("pano range outside (0, max_range]");
  double& cell = ranges_[index(u, v)];
  cell = std::min(cell, range);
}

std::size_t PanoDepthMap::return_count() const {
  return static_cast<std::size_t>(
      std::count_if(ranges_.begin(), ranges_.end(), [](double r) { return r != kNoReturn; }));
}

std::optional<PixelIndex> pano_pixel(const Eigen::Vector3d& p, int width, int height) {
  const double range = p.norm();
  if (range == 0.0) return std::nullopt;
  const double azimuth = wrap_two_pi(std::atan2(p.y(), p.x()));
  const double elevation = std::asin(std::clamp(p.z() / range, -1.0, 1.0));
  const double colatitude = std::numbers::pi / 2.0 - elevation;
  int u = static_cast<int>(std::floor(azimuth / kTwoPi * width));
  int v = static_cast<int>(std::floor(colatitude / std::numbers::pi * height));
  u = std::clamp(u, 0, width - 1);
  v = std::clamp(v, 0, height - 1);
  return PixelIndex{u, v};
}

PanoDepthMap project_to_pano(const PointCloud& cloud_body, int width, int height,
                             double max_range) {
  if (cloud_body.frame() != Frame::kBody) throw InputError("project_to_pano expects a body-frame cloud");
  PanoDepthMap map(width, height, max_range);
  for (const auto& p : cloud_body.points()) {
    const double range = p.norm();
    if (range == 0.0) {
      ++map.dropped_at_origin_;
      continue;
    }
    if (range > max_range) {
      ++map.dropped_beyond_range_;
      continue;
    }
    const PixelIndex px = *pano_pixel(p, width, height);
    double& cell = map.ranges_[map.index(px.u, px.v)];
    cell = std::min(cell, range);
  }
  return map;
}

Eigen::Vector3d pano_bin_direction(int u, int v, int width, int height) {
  if (width < 1 || height < 1 || u < 0 || u >= width || v < 0 || v >= height) {
    throw InputError("pano_bin_direction: pixel out of bounds");
  }
  const double azimuth = (u + 0.5) / width * kTwoPi;
  const double elevation = std::numbers::pi / 2.0 - (v + 0.5) / height * std::numbers::pi;
  const double ce = std::cos(elevation);
  return {ce * std::cos(azimuth), ce * std::sin(azimuth), std::sin(elevation)};
}

}  // namespace aeos
