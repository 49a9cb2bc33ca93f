#pragma once

namespace swarmsim {

// Per-wheel velocity PID. Output is normalized duty in [-1, 1]. Default
// gains are tuned for the 50 Hz loop fed by encoder-derived speed (which
// lags one reading interval): mid-range steps settle within 2% by 0.5 s and
// the loop stays quiet at rest. The integral term accumulates ki*e*dt, so it
// contributes to the duty directly: a limit just above 1 lets the integral
// alone hold any reachable steady duty while keeping the post-saturation
// unwind short.
struct PidGains {
  double kp = 0.08;
  double ki = 0.823;
  double kd = 0.0;
  double integral_limit = 1.2;  // clamp on the accumulated integral term
  double output_limit = 1.0;    // duty clamp
};

struct MotorPlantParams {
  double time_constant_s = 0.1;
  double max_wheel_speed_radps = 17.5;
  bool euler = false;  // default is the exact first-order discretization
};

struct MotorState {
  double wheel_speed_radps = 0.0;  // plant state
  double duty = 0.0;               // last commanded actuation
  double integral_term = 0.0;
  double prev_measured_radps = 0.0;  // for derivative-on-measurement
};

// Positional PID with integral clamping and output clamping. The derivative
// acts on the measurement so setpoint steps do not kick the output.
MotorState pid_step(const MotorState& state, double setpoint_radps,
                    double measured_radps, double dt_s, const PidGains& gains);

// First-order lag toward duty * max_wheel_speed. The exact discretization
// never overshoots the target regardless of dt.
MotorState motor_plant_step(const MotorState& state, double duty, double dt_s,
                            const MotorPlantParams& plant);

}  // namespace swarmsim
