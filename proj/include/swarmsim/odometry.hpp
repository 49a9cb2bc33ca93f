#pragma once

#include "swarmsim/kinematics.hpp"

namespace swarmsim {

// Cumulative encoder counters plus the reading time. Counts are integral in
// quantized mode (the only intrinsic encoder noise); the simulator's
// unquantized diagnostic mode flows real-valued expectations through the
// same field.
struct EncoderState {
  double left_ticks = 0.0;
  double right_ticks = 0.0;
  double timestamp_s = 0.0;
};

struct OdometryEstimate {
  Pose2D pose;
  Twist body_twist;
  double covariance_trace = 0.0;  // scalar diagnostic, 0 when noise-free
};

struct WheelLinearVelocities {
  double left_mps = 0.0;
  double right_mps = 0.0;
};

struct TickDelta {
  double left = 0.0;
  double right = 0.0;
};

// Straight-line branch threshold on |w*dt| per integration step.
inline constexpr double kStraightEpsilonRad = 1e-6;

// Velocity-difference threshold below which arc_radius reports straight-line.
inline constexpr double kStraightEpsilonMps = 1e-9;

// Wheel angle from a tick delta: A * dT with A = 2*pi / ticks_per_rev.
double ticks_to_angle(double delta_ticks, const RobotParams& params);

// Per-wheel rim velocity D_T * dT / dt. Throws InvalidInterval when the
// reading interval is not positive.
WheelLinearVelocities wheel_velocities(const EncoderState& prev,
                                       const EncoderState& curr,
                                       const RobotParams& params);

// Instantaneous turn radius R = (d_w/2) * (v_r + v_l) / (v_r - v_l).
// Returns +infinity when the wheels agree to within kStraightEpsilonMps.
double arc_radius(double v_left_mps, double v_right_mps,
                  const RobotParams& params);

// Expected (real-valued) tick deltas for executing cmd over dt, the
// dimensionally consistent inverse of the tick-to-velocity chain:
// dT = phi * dt / A with phi from inverse kinematics.
TickDelta tick_split(const Twist& cmd, double dt_s, const RobotParams& params);

// Exact arc-chord pose update for constant (v, w) over dt. Step-size
// invariant: n substeps of dt/n land on the same pose as one step of dt.
Pose2D integrate_pose_exact(const Pose2D& pose, double v_mps, double w_radps,
                            double dt_s);

// Firmware-style pose update kept for side-by-side comparison with the
// exact integrator; never used by default. Applies, term for term:
//   X += |v| * cos(dTheta/2) * (2R sin(dTheta/2))
//   Y += |v| * sin(dTheta/2) * (2R sin(dTheta/2))
//   Theta += (2 * D_T / R) * dT
// Throws UnsupportedBranch when R is degenerate (straight line or spin).
Pose2D integrate_pose_firmware(const Pose2D& pose, double v_mps,
                               double w_radps, double dt_s,
                               const RobotParams& params, double delta_ticks);

// wheel_velocities -> body twist -> exact arc update.
OdometryEstimate update_odometry(const OdometryEstimate& est,
                                 const EncoderState& prev,
                                 const EncoderState& curr,
                                 const RobotParams& params);

}  // namespace swarmsim
