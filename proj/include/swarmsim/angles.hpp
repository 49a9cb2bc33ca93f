#pragma once

#include <cmath>
#include <numbers>

namespace swarmsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Normalize an angle to (-pi, pi].
inline double normalize_angle(double a) {
  double r = std::remainder(a, kTwoPi);
  if (r <= -kPi) r += kTwoPi;
  return r;
}

}  // namespace swarmsim
