#include "swarmsim/world.hpp"

#include <algorithm>
#include <cmath>

#include "swarmsim/angles.hpp"
#include "swarmsim/errors.hpp"

namespace swarmsim {

EncoderNoiseModel::EncoderNoiseModel(const EncoderNoiseParams& params,
                                     uint64_t seed)
    : params_(params), rng_(seed) {
  if (params.scale_sigma < 0.0)
    throw InvalidInput("noise.encoder_scale_sigma must be >= 0");
  if (params.jitter_ticks < 0)
    throw InvalidInput("noise.encoder_jitter_ticks must be >= 0");
  if (params.scale_sigma > 0.0) {
    left_scale_ = 1.0 + rng_.uniform(-params.scale_sigma, params.scale_sigma);
    right_scale_ = 1.0 + rng_.uniform(-params.scale_sigma, params.scale_sigma);
  }
}

EncoderState EncoderNoiseModel::inject(const EncoderState& truth) {
  if (params_.jitter_ticks > 0) {
    left_jitter_accum_ += static_cast<double>(
        rng_.uniform_int(-params_.jitter_ticks, params_.jitter_ticks));
    right_jitter_accum_ += static_cast<double>(
        rng_.uniform_int(-params_.jitter_ticks, params_.jitter_ticks));
  }
  EncoderState out;
  out.left_ticks = truth.left_ticks * left_scale_ + left_jitter_accum_;
  out.right_ticks = truth.right_ticks * right_scale_ + right_jitter_accum_;
  if (params_.quantize) {
    out.left_ticks = std::floor(out.left_ticks);
    out.right_ticks = std::floor(out.right_ticks);
  }
  out.timestamp_s = truth.timestamp_s;
  return out;
}

namespace {

void clamp_to_table(Pose2D& pose, const WorldState& world, double footprint) {
  const double lo_x = footprint;
  const double hi_x = world.table_width_m - footprint;
  const double lo_y = footprint;
  const double hi_y = world.table_height_m - footprint;
  pose.x_m = std::clamp(pose.x_m, lo_x, hi_x);
  pose.y_m = std::clamp(pose.y_m, lo_y, hi_y);
}

double station_rate_for(const WorldState& world, const std::string& robot_id,
                        const PowerParams& power) {
  for (const auto& st : world.charging_stations) {
    if (st.occupied_by && *st.occupied_by == robot_id) return st.charge_rate_w;
  }
  return power.charge_rate_w;
}

}  // namespace

void world_step(WorldState& world, double dt_s, const WorldConfig& cfg) {
  if (!(dt_s > 0.0)) throw InvalidInterval("world_step requires dt > 0");
  if (world.table_width_m < 2.0 * cfg.robot.footprint_radius_m ||
      world.table_height_m < 2.0 * cfg.robot.footprint_radius_m)
    throw InvalidInput("table smaller than the robot footprint");

  const double rad_per_tick = cfg.robot.radians_per_tick();
  const double t_next = world.sim_time_s + dt_s;

  for (auto& r : world.robots) {
    const bool empty = r.battery_wh <= 0.0;
    const double duty_l = empty ? 0.0 : r.commanded_duty_left;
    const double duty_r = empty ? 0.0 : r.commanded_duty_right;

    r.motor_left = motor_plant_step(r.motor_left, duty_l, dt_s, cfg.plant);
    r.motor_right = motor_plant_step(r.motor_right, duty_r, dt_s, cfg.plant);

    const WheelSpeeds wheels{r.motor_left.wheel_speed_radps,
                             r.motor_right.wheel_speed_radps};
    const Twist twist = forward_kinematics(wheels, cfg.robot);
    r.pose = integrate_pose_exact(r.pose, twist.linear_mps,
                                  twist.angular_radps, dt_s);
    clamp_to_table(r.pose, world, cfg.robot.footprint_radius_m);

    // Wheels keep spinning against the wall clamp, so odometry diverges from
    // truth there just like a real robot pushed against a fence.
    r.left_tick_accum += wheels.left_radps * dt_s / rad_per_tick;
    r.right_tick_accum += wheels.right_radps * dt_s / rad_per_tick;
    r.encoders.left_ticks = cfg.encoder_quantize
                                ? std::floor(r.left_tick_accum)
                                : r.left_tick_accum;
    r.encoders.right_ticks = cfg.encoder_quantize
                                 ? std::floor(r.right_tick_accum)
                                 : r.right_tick_accum;
    r.encoders.timestamp_s = t_next;

    const double duty_mag =
        0.5 * (std::abs(r.motor_left.duty) + std::abs(r.motor_right.duty));
    const double rate = station_rate_for(world, r.id, cfg.power);
    r = battery_step(r, duty_mag > 0.0, r.charging, dt_s, cfg.power, rate);
  }
  world.sim_time_s = t_next;
}

double sample_microphone(const RobotTruth& robot,
                         const std::vector<SoundSource>& sources,
                         const SoundModelParams& model) {
  if (model.min_distance_m <= 0.0)
    throw InvalidInput("sound.min_distance_m must be > 0");
  double total = 0.0;
  for (const auto& src : sources) {
    if (!src.active) continue;
    const double dx = src.x_m - robot.pose.x_m;
    const double dy = src.y_m - robot.pose.y_m;
    const double d = std::max(std::hypot(dx, dy), model.min_distance_m);
    double gain = 1.0;
    if (model.directivity_exponent != 0.0) {
      const double alpha =
          normalize_angle(std::atan2(dy, dx) - robot.pose.theta_rad);
      gain = std::pow(std::max(0.0, std::cos(alpha)),
                      model.directivity_exponent);
    }
    total += src.power_w / (4.0 * kPi * d * d) * gain;
  }
  return total;
}

RobotTruth battery_step(const RobotTruth& robot, bool moving, bool charging,
                        double dt_s, const PowerParams& power) {
  return battery_step(robot, moving, charging, dt_s, power,
                      power.charge_rate_w);
}

RobotTruth battery_step(const RobotTruth& robot, bool moving, bool charging,
                        double dt_s, const PowerParams& power,
                        double charge_rate_w) {
  if (!(dt_s > 0.0)) throw InvalidInterval("battery_step requires dt > 0");
  if (power.efficiency <= 0.0)
    throw InvalidInput("power.efficiency must be > 0");
  RobotTruth out = robot;
  const double duty_mag =
      0.5 * (std::abs(robot.motor_left.duty) + std::abs(robot.motor_right.duty));
  double drawn_w = power.idle_w;
  if (moving) drawn_w += (power.move_w - power.idle_w) * duty_mag;
  drawn_w /= power.efficiency;
  double wh = robot.battery_wh - drawn_w * dt_s / 3600.0;
  if (charging) wh += charge_rate_w * dt_s / 3600.0;
  out.battery_wh = std::clamp(wh, 0.0, power.capacity_wh);
  return out;
}

}  // namespace swarmsim
