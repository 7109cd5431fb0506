#pragma once

#include <filesystem>
#include <vector>

#include "aeos/uncertainty/observability.hpp"

namespace aeos {

/// A-optimal values at theta0 + s·dtheta, s = 0..N-1, N = round(2π/dtheta).
struct UncertaintySamples {
  double theta0 = 0.0;
  double dtheta = 0.0;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  /// Throws InputError unless N >= 4 and every value is finite and positive.
  void validate() const;
};

struct UncertaintyConfig {
  int pano_width = 360;
  int pano_height = 180;
  double dtheta = 0.17453292519943295;  // 10°
  double damping = 1e-3;
  Matrix6d weight = Matrix6d::Identity();
};

/// Number of samples for a spacing: round(2π/dtheta). Throws InputError
/// when that is below 4.
std::size_t sample_count(double dtheta);

/// Samples U around the full turn. Per-column information sums are shared
/// between overlapping windows; the result equals evaluating a_optimal_u on
/// predict_scan at every angle.
UncertaintySamples sample_uncertainty(const PanoDepthMap& pano, double theta_t,
                                      const SensorModel& sensor, const Pose& body_pose,
                                      const UncertaintyConfig& config);

struct SurrogateValue {
  double cost = 0.0;
  double gradient = 0.0;  // d cost / d theta
};

/// Periodic piecewise-linear interpolation of the samples.
SurrogateValue surrogate_cost(const UncertaintySamples& samples, double theta);

/// CSV with header `s,theta,u`.
void write_uncertainty_csv(const std::filesystem::path& path, const UncertaintySamples& samples);

}  // namespace aeos
