#pragma once

#include <Eigen/Core>
#include <limits>
#include <optional>
#include <vector>

#include "aeos/geometry/point_cloud.hpp"

namespace aeos {

struct PixelIndex {
  int u = 0;  // azimuth column
  int v = 0;  // colatitude row, 0 = straight up
  bool operator==(const PixelIndex&) const = default;
};

/// H x W spherical range image centred on the body frame. Each pixel holds the
/// shortest range of any point binned into it, or kNoReturn.
class PanoDepthMap {
 public:
  static constexpr double kNoReturn = std::numeric_limits<double>::infinity();

  /// All-sentinel map. Throws InputError for non-positive sizes or range.
  PanoDepthMap(int width, int height, double max_range);

  int width() const { return width_; }
  int height() const { return height_; }
  double max_range() const { return max_range_; }

  double at(int u, int v) const { return ranges_[index(u, v)]; }
  bool has_return(int u, int v) const { return at(u, v) != kNoReturn; }
  const std::vector<double>& ranges() const { return ranges_; }

  /// Keeps the smaller of the stored range and `range` (which must lie in (0, max_range]).
  void insert(int u, int v, double range);

  std::size_t return_count() const;

  /// Points skipped because they sat at the origin.
  std::size_t dropped_at_origin() const { return dropped_at_origin_; }
  /// Points skipped because they were beyond max_range.
  std::size_t dropped_beyond_range() const { return dropped_beyond_range_; }

 private:
  friend PanoDepthMap project_to_pano(const PointCloud&, int, int, double);

  std::size_t index(int u, int v) const {
    return static_cast<std::size_t>(v) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(u);
  }

  int width_;
  int height_;
  double max_range_;
  std::vector<double> ranges_;
  std::size_t dropped_at_origin_ = 0;
  std::size_t dropped_beyond_range_ = 0;
};

/// Bin of a body-frame point: u from azimuth in [0, 2π), v from colatitude
/// π/2 - elevation, both clamped into the image. nullopt for the origin.
std::optional<PixelIndex> pano_pixel(const Eigen::Vector3d& p, int width, int height);

/// Requires a body-frame cloud (InputError otherwise).
PanoDepthMap project_to_pano(const PointCloud& cloud_body, int width, int height,
                             double max_range);

/// Unit direction through the centre of bin (u, v).
Eigen::Vector3d pano_bin_direction(int u, int v, int width, int height);

}  // namespace aeos
