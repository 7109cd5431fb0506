#pragma once

#include "aeos/geometry/trajectory.hpp"

namespace aeos {

struct ApeOptions {
  bool align = true;            // rigid Umeyama alignment, no scale
  double match_tolerance = 0.05;  // s, nearest-timestamp gate (half the step)
};

/// Translational RMSE between estimate and truth after optional alignment.
/// Throws InputError with fewer than two matched poses.
double compute_ape(const Trajectory& estimate, const Trajectory& truth,
                   const ApeOptions& options = {});

/// Mean over consecutive estimate poses in [t - tau, t] of the norm of the
/// difference between true and estimated body-frame relative translations.
/// Throws OutOfRangeError when either trajectory does not cover the window.
double compute_rte(const Trajectory& estimate, const Trajectory& truth, double t, double tau,
                   double match_tolerance = 0.05);

}  // namespace aeos
