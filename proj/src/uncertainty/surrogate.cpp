#include "aeos/uncertainty/surrogate.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <fstream>

#include "aeos/common/angles.hpp"
#include "aeos/common/error.hpp"

namespace aeos {

void UncertaintySamples::validate() const {
  if (values.size() < 4) throw InputError("uncertainty samples: need at least 4 values");
  if (!(dtheta > 0.0)) throw InputError("uncertainty samples: dtheta must be positive");
  for (double v : values) {
    if (!std::isfinite(v) || !(v > 0.0)) throw InputError("uncertainty samples: values must be finite and positive");
  }
}

std::size_t sample_count(double dtheta) {
  if (!(dtheta > 0.0)) throw InputError("dtheta must be positive");
  const double n = std::round(kTwoPi / dtheta);
  if (n < 4.0) throw InputError("dtheta too coarse: fewer than 4 samples");
  return static_cast<std::size_t>(n);
}

UncertaintySamples sample_uncertainty(const PanoDepthMap& pano, double theta_t,
                                      const SensorModel& sensor, const Pose& body_pose,
                                      const UncertaintyConfig& config) {
  const std::size_t n = sample_count(config.dtheta);
  const int w = pano.width(), h = pano.height();
  // Per-column Σ J Jᵀ over the rows inside the vertical FoV.
  std::vector<Matrix6d> column(static_cast<std::size_t>(w), Matrix6d::Zero());
  for (int u = 0; u < w; ++u) {
    Matrix6d& acc = column[static_cast<std::size_t>(u)];
    for (int v = 0; v < h; ++v) {
      if (!pano_row_in_window(v, h, sensor.fov_v) || !pano.has_return(u, v)) continue;
      const Eigen::Vector3d pb = pano_bin_direction(u, v, w, h) * pano.at(u, v);
      const Vector6d j = residual_jacobian(body_pose * pb,
                                           body_pose.rotation() * pano_pixel_normal(pano, u, v),
                                           body_pose);
      acc.selfadjointView<Eigen::Upper>().rankUpdate(j);
    }
    acc.triangularView<Eigen::StrictlyLower>() = acc.transpose();
  }
  UncertaintySamples out;
  out.theta0 = wrap_two_pi(theta_t);
  out.dtheta = config.dtheta;
  out.values.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    const double angle = out.theta0 + static_cast<double>(s) * config.dtheta;
    Matrix6d info = config.damping * Matrix6d::Identity();
    for (int u = 0; u < w; ++u) {
      if (pano_column_in_window(u, w, angle, sensor.fov_h)) info += column[static_cast<std::size_t>(u)];
    }
    out.values[s] = (config.weight * info.ldlt().solve(Matrix6d::Identity())).trace();
  }
  return out;
}

SurrogateValue surrogate_cost(const UncertaintySamples& samples, double theta) {
  const std::size_t n = samples.values.size();
  if (n == 0) throw InputError("surrogate_cost: no samples");
  double idx = wrap_two_pi(theta - samples.theta0) / samples.dtheta;
  // Snap rounding noise onto knots so a knot returns its sample exactly.
  const double nearest = std::round(idx);
  if (std::abs(idx - nearest) < 1e-9) idx = nearest;
  const double fl = std::floor(idx);
  const double delta = idx - fl;
  const std::size_t k = static_cast<std::size_t>(fl) % n;
  const std::size_t k1 = (k + 1) % n;
  const double u0 = samples.values[k], u1 = samples.values[k1];
  return {(1.0 - delta) * u0 + delta * u1, (u1 - u0) / samples.dtheta};
}

void write_uncertainty_csv(const std::filesystem::path& path, const UncertaintySamples& samples) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write " + path.string());
  f.precision(17);
  f << "s,theta,u\n";
  for (std::size_t s = 0; s < samples.size(); ++s) {
    f << s << ',' << wrap_two_pi(samples.theta0 + static_cast<double>(s) * samples.dtheta) << ','
      << samples.values[s] << '\n';
  }
  if (!f) throw IoError("write failed: " + path.string());
}

}  // namespace aeos
