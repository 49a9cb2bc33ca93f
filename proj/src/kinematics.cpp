#include "swarmsim/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "swarmsim/errors.hpp"

namespace swarmsim {

namespace {

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw InvalidInput(std::string("non-finite ") + name);
  }
}

}  // namespace

void RobotParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw InvalidInput(std::string("robot.") + name + " must be > 0");
    }
  };
  positive(wheel_radius_m, "wheel_radius_m");
  positive(wheel_base_m, "wheel_base_m");
  positive(max_linear_speed_mps, "max_linear_speed_mps");
  positive(max_wheel_speed_radps, "max_wheel_speed_radps");
  positive(footprint_radius_m, "footprint_radius_m");
  if (ticks_per_rev <= 0) {
    throw InvalidInput("robot.ticks_per_rev must be > 0");
  }
  if (max_linear_speed_mps > wheel_radius_m * max_wheel_speed_radps + 1e-12) {
    throw InvalidInput(
        "robot.max_linear_speed_mps exceeds wheel_radius_m * "
        "max_wheel_speed_radps");
  }
}

Twist forward_kinematics(const WheelSpeeds& wheels, const RobotParams& params) {
  require_finite(wheels.left_radps, "left wheel speed");
  require_finite(wheels.right_radps, "right wheel speed");
  const double r = params.wheel_radius_m;
  Twist t;
  t.linear_mps = r * (wheels.right_radps + wheels.left_radps) / 2.0;
  t.angular_radps =
      r * (wheels.right_radps - wheels.left_radps) / params.wheel_base_m;
  return t;
}

WheelSpeeds inverse_kinematics(const Twist& cmd, const RobotParams& params) {
  require_finite(cmd.linear_mps, "linear velocity");
  require_finite(cmd.angular_radps, "angular velocity");
  const double half_base = params.wheel_base_m / 2.0;
  WheelSpeeds w;
  w.right_radps =
      (cmd.linear_mps + cmd.angular_radps * half_base) / params.wheel_radius_m;
  w.left_radps =
      (cmd.linear_mps - cmd.angular_radps * half_base) / params.wheel_radius_m;
  return w;
}

Twist twist_from_wheel_linear(double v_left_mps, double v_right_mps,
                              double wheel_base_m) {
  Twist t;
  t.linear_mps = (v_right_mps + v_left_mps) / 2.0;
  t.angular_radps = (v_right_mps - v_left_mps) / wheel_base_m;
  return t;
}

Twist saturate_twist(const Twist& cmd, const RobotParams& params) {
  require_finite(cmd.linear_mps, "linear velocity");
  require_finite(cmd.angular_radps, "angular velocity");

  const WheelSpeeds wheels = inverse_kinematics(cmd, params);
  const double peak =
      std::max(std::abs(wheels.left_radps), std::abs(wheels.right_radps));

  double k = 1.0;
  if (peak > params.max_wheel_speed_radps) {
    k = params.max_wheel_speed_radps / peak;
  }
  const double lin = std::abs(cmd.linear_mps) * k;
  if (lin > params.max_linear_speed_mps) {
    k *= params.max_linear_speed_mps / lin;
  }
  return {cmd.linear_mps * k, cmd.angular_radps * k};
}

}  // namespace swarmsim
