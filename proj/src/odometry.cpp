#include "swarmsim/odometry.hpp"

#include <cmath>
#include <limits>

#include "swarmsim/errors.hpp"

namespace swarmsim {

double ticks_to_angle(double delta_ticks, const RobotParams& params) {
  return params.radians_per_tick() * delta_ticks;
}

WheelLinearVelocities wheel_velocities(const EncoderState& prev,
                                       const EncoderState& curr,
                                       const RobotParams& params) {
  const double dt = curr.timestamp_s - prev.timestamp_s;
  if (!(dt > 0.0)) {
    throw InvalidInterval("encoder reading interval must be positive");
  }
  const double d_t = params.meters_per_tick();
  WheelLinearVelocities v;
  v.left_mps = d_t * (curr.left_ticks - prev.left_ticks) / dt;
  v.right_mps = d_t * (curr.right_ticks - prev.right_ticks) / dt;
  return v;
}

double arc_radius(double v_left_mps, double v_right_mps,
                  const RobotParams& params) {
  const double diff = v_right_mps - v_left_mps;
  if (std::abs(diff) < kStraightEpsilonMps) {
    return std::numeric_limits<double>::infinity();
  }
  return (params.wheel_base_m / 2.0) * (v_right_mps + v_left_mps) / diff;
}

TickDelta tick_split(const Twist& cmd, double dt_s, const RobotParams& params) {
  const WheelSpeeds w = inverse_kinematics(cmd, params);
  const double a = params.radians_per_tick();
  return {w.left_radps * dt_s / a, w.right_radps * dt_s / a};
}

Pose2D integrate_pose_exact(const Pose2D& pose, double v_mps, double w_radps,
                            double dt_s) {
  const double dtheta = w_radps * dt_s;
  Pose2D out = pose;
  if (std::abs(dtheta) < kStraightEpsilonRad) {
    // Midpoint heading keeps the seam with the arc branch below 1e-9 m at
    // any speed; identical to the plain straight step when w is exactly 0.
    out.x_m += v_mps * dt_s * std::cos(pose.theta_rad + dtheta / 2.0);
    out.y_m += v_mps * dt_s * std::sin(pose.theta_rad + dtheta / 2.0);
    out.theta_rad = normalize_angle(pose.theta_rad + dtheta);
    return out;
  }
  // Chord of the circular arc of radius R = v/w.
  const double radius = v_mps / w_radps;
  const double chord = 2.0 * radius * std::sin(dtheta / 2.0);
  out.x_m += chord * std::cos(pose.theta_rad + dtheta / 2.0);
  out.y_m += chord * std::sin(pose.theta_rad + dtheta / 2.0);
  out.theta_rad = normalize_angle(pose.theta_rad + dtheta);
  return out;
}

Pose2D integrate_pose_firmware(const Pose2D& pose, double v_mps,
                               double w_radps, double dt_s,
                               const RobotParams& params, double delta_ticks) {
  if (!(dt_s > 0.0)) {
    throw InvalidInterval("dt must be positive");
  }
  const double dtheta = w_radps * dt_s;
  if (std::abs(dtheta) < kStraightEpsilonRad) {
    throw UnsupportedBranch("straight-line branch: arc radius is infinite");
  }
  const double radius = v_mps / w_radps;
  if (std::abs(radius) < 1e-9) {
    throw UnsupportedBranch("spin-in-place branch: arc radius is zero");
  }
  const double chord = 2.0 * radius * std::sin(dtheta / 2.0);
  Pose2D out = pose;
  out.x_m += std::abs(v_mps) * std::cos(dtheta / 2.0) * chord;
  out.y_m += std::abs(v_mps) * std::sin(dtheta / 2.0) * chord;
  out.theta_rad = normalize_angle(
      pose.theta_rad + (2.0 * params.meters_per_tick() / radius) * delta_ticks);
  return out;
}

OdometryEstimate update_odometry(const OdometryEstimate& est,
                                 const EncoderState& prev,
                                 const EncoderState& curr,
                                 const RobotParams& params) {
  const WheelLinearVelocities wheels = wheel_velocities(prev, curr, params);
  const Twist body =
      twist_from_wheel_linear(wheels.left_mps, wheels.right_mps,
                              params.wheel_base_m);
  const double dt = curr.timestamp_s - prev.timestamp_s;
  OdometryEstimate out = est;
  out.pose = integrate_pose_exact(est.pose, body.linear_mps,
                                  body.angular_radps, dt);
  out.body_twist = body;
  return out;
}

}  // namespace swarmsim
