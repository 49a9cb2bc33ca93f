#pragma once

#include "swarmsim/angles.hpp"

namespace swarmsim {

// Physical parameters of one robot. Defaults model a 7 cm differential-drive
// chassis with a measured 0.28 m/s top speed; max_wheel_speed is set so the
// two limits are consistent (max_linear = wheel_radius * max_wheel_speed).
struct RobotParams {
  double wheel_radius_m = 0.016;
  double wheel_base_m = 0.06;  // distance between wheel centers
  int ticks_per_rev = 1440;
  double max_linear_speed_mps = 0.28;
  double max_wheel_speed_radps = 17.5;
  double footprint_radius_m = 0.05;  // collision disc

  // Wheel angle per encoder tick.
  double radians_per_tick() const { return kTwoPi / ticks_per_rev; }
  // Meters traveled by the wheel rim per tick.
  double meters_per_tick() const {
    return wheel_radius_m * radians_per_tick();
  }

  // Throws InvalidInput naming the offending field.
  void validate() const;
};

// Body velocity: linear along body X, angular about Z.
struct Twist {
  double linear_mps = 0.0;
  double angular_radps = 0.0;
};

struct WheelSpeeds {
  double left_radps = 0.0;
  double right_radps = 0.0;
};

// Planar pose in the global table frame. theta stays in (-pi, pi].
struct Pose2D {
  double x_m = 0.0;
  double y_m = 0.0;
  double theta_rad = 0.0;
};

// v = r*(phi_r + phi_l)/2, w = r*(phi_r - phi_l)/d_w.
Twist forward_kinematics(const WheelSpeeds& wheels, const RobotParams& params);

// phi_r = (v + w*d_w/2)/r, phi_l = (v - w*d_w/2)/r.
WheelSpeeds inverse_kinematics(const Twist& cmd, const RobotParams& params);

// Body twist from wheel rim linear velocities (used by odometry, which works
// in meters per second rather than wheel radians).
Twist twist_from_wheel_linear(double v_left_mps, double v_right_mps,
                              double wheel_base_m);

// Uniform scale-down so neither implied wheel speed exceeds the wheel cap
// and |linear| stays within the linear cap. Preserves the v:w ratio:
// the result is k*cmd for some 0 < k <= 1.
Twist saturate_twist(const Twist& cmd, const RobotParams& params);

}  // namespace swarmsim
