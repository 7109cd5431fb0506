#pragma once

#include <cstddef>

namespace aeos {

struct RewardWeights {
  double exploration = 1.0;
  double odometry = 1.0;
  double rte_floor = 0.01;  // m; caps the odometry term at 1/rte_floor
};

struct RewardTerms {
  double exploration = 0.0;  // newly observed voxel ratio, [0, 1]
  double odometry = 0.0;     // 1 / max(RTE, floor)
  double total = 0.0;
};

/// Throws InputError for new > total, a negative or non-finite RTE, or a
/// non-positive floor.
RewardTerms compute_reward(std::size_t new_voxels, std::size_t total_voxels, double rte,
                           const RewardWeights& weights);

}  // namespace aeos
