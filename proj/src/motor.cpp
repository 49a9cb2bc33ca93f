#include "swarmsim/motor.hpp"

#include <algorithm>
#include <cmath>

#include "swarmsim/errors.hpp"

namespace swarmsim {

MotorState pid_step(const MotorState& state, double setpoint_radps,
                    double measured_radps, double dt_s,
                    const PidGains& gains) {
  if (!(dt_s > 0.0)) {
    throw InvalidInterval("pid dt must be positive");
  }
  const double error = setpoint_radps - measured_radps;

  MotorState out = state;
  out.integral_term = std::clamp(state.integral_term + gains.ki * error * dt_s,
                                 -gains.integral_limit, gains.integral_limit);
  const double derivative =
      -gains.kd * (measured_radps - state.prev_measured_radps) / dt_s;
  const double raw = gains.kp * error + out.integral_term + derivative;
  out.duty = std::clamp(raw, -gains.output_limit, gains.output_limit);
  out.prev_measured_radps = measured_radps;
  return out;
}

MotorState motor_plant_step(const MotorState& state, double duty, double dt_s,
                            const MotorPlantParams& plant) {
  if (!(dt_s > 0.0) || !(plant.time_constant_s > 0.0)) {
    throw InvalidInterval("plant dt and time constant must be positive");
  }
  const double target = duty * plant.max_wheel_speed_radps;
  MotorState out = state;
  out.duty = duty;
  if (plant.euler) {
    out.wheel_speed_radps =
        state.wheel_speed_radps +
        (dt_s / plant.time_constant_s) * (target - state.wheel_speed_radps);
  } else {
    const double decay = std::exp(-dt_s / plant.time_constant_s);
    out.wheel_speed_radps =
        target + (state.wheel_speed_radps - target) * decay;
  }
  return out;
}

}  // namespace swarmsim
