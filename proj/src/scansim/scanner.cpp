#include "aeos/scansim/scanner.hpp"

#include <algorithm>
#include <cmath>

#include "aeos/common/angles.hpp"
#include "aeos/common/error.hpp"

namespace aeos {

ScannerState step_scanner(ScannerState state, double omega_cmd, double dt,
                          const ScannerLimits& limits) {
  if (!(dt > 0.0)) throw InputError("step_scanner: dt must be positive");
  if (limits.delay_steps < 0) throw InputError("step_scanner: negative delay");
  if (!std::isfinite(omega_cmd)) throw InputError("step_scanner: non-finite command");
  state.pending.push_back(std::clamp(omega_cmd, -limits.omega_max, limits.omega_max));
  const auto depth = static_cast<std::size_t>(limits.delay_steps) + 1;
  // Before the pipeline fills, the rotor keeps its previous rate.
  while (state.pending.size() < depth) state.pending.push_front(state.omega);
  const double effective = state.pending.front();
  state.pending.pop_front();
  state.omega = effective;
  state.theta = wrap_two_pi(state.theta + effective * dt);
  state.time += dt;
  return state;
}

}  // namespace aeos
