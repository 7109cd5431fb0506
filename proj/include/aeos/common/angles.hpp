#pragma once

#include <cmath>
#include <numbers>

namespace aeos {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Wraps to [0, 2π).
inline double wrap_two_pi(double a) {
  double w = std::fmod(a, kTwoPi);
  if (w < 0.0) w += kTwoPi;
  // fmod of a tiny negative value can round up to exactly 2π.
  if (w >= kTwoPi) w = 0.0;
  return w;
}

/// Wraps to [-π, π).
inline double wrap_pi(double a) {
  return wrap_two_pi(a + std::numbers::pi) - std::numbers::pi;
}

}  // namespace aeos
