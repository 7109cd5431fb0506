#include "aeos/rl/reward.hpp"

#include <algorithm>
#include <cmath>

#include "aeos/common/error.hpp"

namespace aeos {

RewardTerms compute_reward(std::size_t new_voxels, std::size_t total_voxels, double rte,
                           const RewardWeights& weights) {
  if (new_voxels > total_voxels) throw InputError("reward: more new voxels than scanned voxels");
  if (!(rte >= 0.0) || !std::isfinite(rte)) throw InputError("reward: RTE must be finite and >= 0");
  if (!(weights.rte_floor > 0.0)) throw InputError("reward: RTE floor must be > 0");
  RewardTerms r;
  r.exploration = total_voxels == 0
                      ? 0.0
                      : static_cast<double>(new_voxels) / static_cast<double>(total_voxels);
  r.odometry = 1.0 / std::max(rte, weights.rte_floor);
  r.total = weights.exploration * r.exploration + weights.odometry * r.odometry;
  return r;
}

}  // namespace aeos
