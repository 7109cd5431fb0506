#pragma once

#include <deque>

namespace aeos {

/// Rotor state. Commands pass through a FIFO so the command applied on a tick
/// is the one issued `delay_steps` ticks earlier.
struct ScannerState {
  double theta = 0.0;  // rad, [0, 2π)
  double omega = 0.0;  // rad/s, last applied rate
  double time = 0.0;   // s
  std::deque<double> pending;
};

struct ScannerLimits {
  double omega_max = 8.0;  // rad/s
  int delay_steps = 1;
};

/// Integrates θ at constant rate for one tick. Throws InputError for dt <= 0
/// or a negative delay.
ScannerState step_scanner(ScannerState state, double omega_cmd, double dt,
                          const ScannerLimits& limits);

}  // namespace aeos
