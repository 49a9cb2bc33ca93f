#include <doctest.h>

#include <cmath>
#include <vector>

#include "swarmsim/errors.hpp"
#include "swarmsim/rng.hpp"
#include "swarmsim/world.hpp"

using namespace swarmsim;

namespace {

WorldState one_robot_world(Pose2D pose) {
  WorldState w;
  RobotTruth r;
  r.id = "r1";
  r.pose = pose;
  w.robots.push_back(r);
  return w;
}

// Holds the plant exactly at w0: with the exact discretization the state
// target + (w0 - target) * decay stays put when target == w0.
void pin_wheels(RobotTruth& r, double w_radps, const MotorPlantParams& plant) {
  r.motor_left.wheel_speed_radps = w_radps;
  r.motor_right.wheel_speed_radps = w_radps;
  r.commanded_duty_left = w_radps / plant.max_wheel_speed_radps;
  r.commanded_duty_right = w_radps / plant.max_wheel_speed_radps;
}

}  // namespace

TEST_CASE("world_step: rest changes only the clock and idle battery drain") {
  WorldState w = one_robot_world({1.0, 0.8, 0.4});
  WorldConfig cfg;
  const double dt = 0.02;
  world_step(w, dt, cfg);
  const RobotTruth& r = w.robots[0];
  CHECK(r.pose.x_m == 1.0);
  CHECK(r.pose.y_m == 0.8);
  CHECK(r.pose.theta_rad == 0.4);
  CHECK(r.encoders.left_ticks == 0.0);
  CHECK(r.encoders.right_ticks == 0.0);
  CHECK(w.sim_time_s == dt);
  CHECK(r.battery_wh ==
        doctest::Approx(7.4 - cfg.power.idle_w * dt / 3600.0).epsilon(1e-12));
}

TEST_CASE("world_step: pinned wheels drive a closed-form straight line") {
  WorldState w = one_robot_world({0.5, 0.5, 0.7});
  WorldConfig cfg;
  pin_wheels(w.robots[0], 10.0, cfg.plant);
  const double dt = 0.02;
  for (int k = 0; k < 50; ++k) world_step(w, dt, cfg);  // 1 s
  const double dist = cfg.robot.wheel_radius_m * 10.0 * 1.0;
  const RobotTruth& r = w.robots[0];
  CHECK(std::abs(r.pose.x_m - (0.5 + dist * std::cos(0.7))) < 1e-9);
  CHECK(std::abs(r.pose.y_m - (0.5 + dist * std::sin(0.7))) < 1e-9);
  CHECK(std::abs(r.pose.theta_rad - 0.7) < 1e-12);
}

TEST_CASE("world_step: outward command pins the pose to the table edge") {
  WorldConfig cfg;
  const double fp = cfg.robot.footprint_radius_m;
  WorldState w = one_robot_world({2.5 - fp, 0.8, 0.0});  // at the right wall
  pin_wheels(w.robots[0], 17.5, cfg.plant);
  for (int k = 0; k < 25; ++k) world_step(w, 0.02, cfg);
  const RobotTruth& r = w.robots[0];
  CHECK(r.pose.x_m == 2.5 - fp);
  CHECK(r.pose.y_m == doctest::Approx(0.8));
  // wheels kept spinning against the wall, so the encoders kept counting
  CHECK(r.encoders.left_ticks > 0.0);
}

TEST_CASE("world_step: every pose stays within table bounds") {
  WorldConfig cfg;
  Rng rng(5);
  WorldState w;
  for (int i = 0; i < 4; ++i) {
    RobotTruth r;
    r.id = "r" + std::to_string(i);
    r.pose = {rng.uniform(0.1, 2.4), rng.uniform(0.1, 1.65),
              rng.uniform(-kPi, kPi)};
    w.robots.push_back(r);
  }
  const double fp = cfg.robot.footprint_radius_m;
  for (int k = 0; k < 400; ++k) {
    for (auto& r : w.robots) {
      r.commanded_duty_left = rng.uniform(-1.0, 1.0);
      r.commanded_duty_right = rng.uniform(-1.0, 1.0);
    }
    world_step(w, 0.02, cfg);
    for (const auto& r : w.robots) {
      CHECK(r.pose.x_m >= fp);
      CHECK(r.pose.x_m <= w.table_width_m - fp);
      CHECK(r.pose.y_m >= fp);
      CHECK(r.pose.y_m <= w.table_height_m - fp);
    }
  }
}

TEST_CASE("world_step: empty battery forces zero duty") {
  WorldState w = one_robot_world({1.0, 0.8, 0.0});
  WorldConfig cfg;
  w.robots[0].battery_wh = 0.0;
  w.robots[0].commanded_duty_left = 1.0;
  w.robots[0].commanded_duty_right = 1.0;
  world_step(w, 0.02, cfg);
  CHECK(w.robots[0].motor_left.duty == 0.0);
  CHECK(w.robots[0].motor_right.duty == 0.0);
  CHECK(w.robots[0].motor_left.wheel_speed_radps == 0.0);
  CHECK(w.robots[0].battery_wh == 0.0);
}

TEST_CASE("world_step: rejects a non-positive step") {
  WorldState w = one_robot_world({1, 1, 0});
  WorldConfig cfg;
  CHECK_THROWS_AS(world_step(w, 0.0, cfg), InvalidInterval);
}

TEST_CASE("world_step: tick deltas telescope to the final count") {
  WorldState w = one_robot_world({0.3, 0.8, 0.1});
  WorldConfig cfg;
  pin_wheels(w.robots[0], 7.3, cfg.plant);
  double prev_left = 0.0;
  double delta_sum = 0.0;
  for (int k = 0; k < 200; ++k) {
    world_step(w, 0.02, cfg);
    const double left = w.robots[0].encoders.left_ticks;
    CHECK(left >= prev_left);  // forward drive never loses a tick
    CHECK(left == std::floor(left));
    delta_sum += left - prev_left;
    prev_left = left;
  }
  CHECK(delta_sum == w.robots[0].encoders.left_ticks);
  CHECK(w.robots[0].encoders.left_ticks ==
        std::floor(w.robots[0].left_tick_accum));
}

TEST_CASE("world_step: identical inputs give bit-identical trajectories") {
  WorldConfig cfg;
  WorldState a = one_robot_world({0.4, 0.4, 0.3});
  WorldState b = one_robot_world({0.4, 0.4, 0.3});
  Rng ra(9), rb(9);
  for (int k = 0; k < 300; ++k) {
    a.robots[0].commanded_duty_left = ra.uniform(-1, 1);
    a.robots[0].commanded_duty_right = ra.uniform(-1, 1);
    b.robots[0].commanded_duty_left = rb.uniform(-1, 1);
    b.robots[0].commanded_duty_right = rb.uniform(-1, 1);
    world_step(a, 0.02, cfg);
    world_step(b, 0.02, cfg);
  }
  CHECK(a.robots[0].pose.x_m == b.robots[0].pose.x_m);
  CHECK(a.robots[0].pose.y_m == b.robots[0].pose.y_m);
  CHECK(a.robots[0].pose.theta_rad == b.robots[0].pose.theta_rad);
  CHECK(a.robots[0].encoders.left_ticks == b.robots[0].encoders.left_ticks);
  CHECK(a.robots[0].battery_wh == b.robots[0].battery_wh);
}

TEST_CASE("world_step: noise-free unquantized odometry shadows ground truth") {
  WorldConfig cfg;
  cfg.encoder_quantize = false;
  WorldState w = one_robot_world({0.6, 0.9, -0.5});
  Rng rng(13);
  OdometryEstimate est;
  est.pose = w.robots[0].pose;
  EncoderState prev = w.robots[0].encoders;
  for (int k = 0; k < 250; ++k) {
    w.robots[0].commanded_duty_left = rng.uniform(-0.8, 0.8);
    w.robots[0].commanded_duty_right = rng.uniform(-0.8, 0.8);
    world_step(w, 0.02, cfg);
    est = update_odometry(est, prev, w.robots[0].encoders, cfg.robot);
    prev = w.robots[0].encoders;
    CHECK(std::hypot(est.pose.x_m - w.robots[0].pose.x_m,
                     est.pose.y_m - w.robots[0].pose.y_m) < 1e-9);
  }
}

TEST_CASE("microphone: silence without active sources") {
  RobotTruth r;
  r.pose = {1.0, 1.0, 0.0};
  SoundModelParams model;
  CHECK(sample_microphone(r, {}, model) == 0.0);
  std::vector<SoundSource> muted{{2.0, 1.0, 5.0, false}};
  CHECK(sample_microphone(r, muted, model) == 0.0);
}

TEST_CASE("microphone: inverse-square law") {
  RobotTruth r;
  SoundModelParams model;  // isotropic
  std::vector<SoundSource> src{{0.0, 0.0, 2.0, true}};
  r.pose = {0.4, 0.0, 0.0};
  const double near = sample_microphone(r, src, model);
  r.pose = {0.8, 0.0, 0.0};
  const double far = sample_microphone(r, src, model);
  CHECK(near == doctest::Approx(4.0 * far).epsilon(1e-12));
  CHECK(near == doctest::Approx(2.0 / (4.0 * kPi * 0.16)).epsilon(1e-12));
}

TEST_CASE("microphone: distance floor caps the close-range intensity") {
  RobotTruth r;
  r.pose = {0.001, 0.0, 0.0};
  SoundModelParams model;
  std::vector<SoundSource> src{{0.0, 0.0, 1.0, true}};
  CHECK(sample_microphone(r, src, model) ==
        doctest::Approx(1.0 / (4.0 * kPi * 0.05 * 0.05)).epsilon(1e-12));
}

TEST_CASE("microphone: lobar pickup silences a robot facing away") {
  SoundModelParams model;
  model.directivity_exponent = 2.0;
  std::vector<SoundSource> src{{1.0, 1.0, 5.0, true}};
  RobotTruth r;
  r.pose = {1.2, 1.0, 0.0};  // source is directly behind
  CHECK(sample_microphone(r, src, model) == 0.0);
  r.pose = {1.2, 1.0, kPi};  // now facing it
  CHECK(sample_microphone(r, src, model) > 0.0);
  r.pose = {1.2, 1.0, kPi / 2.0};  // source dead abeam: cos = 0
  CHECK(sample_microphone(r, src, model) == doctest::Approx(0.0));
}

TEST_CASE("microphone: nearest robot is not necessarily the loudest") {
  SoundModelParams model;
  model.directivity_exponent = 1.0;
  std::vector<SoundSource> src{{0.0, 0.0, 3.0, true}};
  RobotTruth close_facing_away;
  close_facing_away.pose = {0.2, 0.0, 0.0};
  RobotTruth far_facing_toward;
  far_facing_toward.pose = {1.5, 0.0, kPi};
  CHECK(sample_microphone(close_facing_away, src, model) <
        sample_microphone(far_facing_toward, src, model));
}

TEST_CASE("microphone: sources add up") {
  SoundModelParams model;
  std::vector<SoundSource> both{{0.0, 0.0, 1.0, true}, {2.0, 0.0, 3.0, true}};
  std::vector<SoundSource> a{both[0]};
  std::vector<SoundSource> b{both[1]};
  RobotTruth r;
  r.pose = {0.7, 0.3, 1.0};
  CHECK(sample_microphone(r, both, model) ==
        doctest::Approx(sample_microphone(r, a, model) +
                        sample_microphone(r, b, model))
            .epsilon(1e-12));
}

TEST_CASE("battery: one hour of full-duty motion costs exactly 1.5 Wh") {
  PowerParams power;
  RobotTruth r;
  r.battery_wh = 7.4;
  r.motor_left.duty = 1.0;
  r.motor_right.duty = -1.0;  // magnitudes count, direction does not
  const RobotTruth out = battery_step(r, true, false, 3600.0, power);
  CHECK(std::abs(out.battery_wh - (7.4 - 1.5)) < 1e-9);
}

TEST_CASE("battery: idle endurance is capacity over idle power") {
  PowerParams power;
  const double hours_to_empty = power.capacity_wh / power.idle_w;
  CHECK(hours_to_empty == doctest::Approx(8.222).epsilon(1e-3));
  RobotTruth r;
  const RobotTruth out =
      battery_step(r, false, false, hours_to_empty * 3600.0, power);
  CHECK(out.battery_wh == doctest::Approx(0.0));
}

TEST_CASE("battery: stays at zero once empty, full once full") {
  PowerParams power;
  RobotTruth r;
  r.battery_wh = 0.0;
  CHECK(battery_step(r, false, false, 10.0, power).battery_wh == 0.0);
  r.battery_wh = power.capacity_wh;
  CHECK(battery_step(r, false, true, 10.0, power).battery_wh ==
        power.capacity_wh);
}

TEST_CASE("battery: charging nets the station rate minus the drain") {
  PowerParams power;  // idle 0.9 W, default station 2.0 W
  RobotTruth r;
  r.battery_wh = 1.0;
  const RobotTruth out = battery_step(r, false, true, 3600.0, power);
  CHECK(std::abs(out.battery_wh - (1.0 + 2.0 - 0.9)) < 1e-9);
  // explicit station rate overrides the default
  const RobotTruth fast = battery_step(r, false, true, 3600.0, power, 3.0);
  CHECK(std::abs(fast.battery_wh - (1.0 + 3.0 - 0.9)) < 1e-9);
}

TEST_CASE("battery: efficiency scales the drawn power up") {
  PowerParams power;
  power.efficiency = 0.5;
  RobotTruth r;
  r.battery_wh = 7.4;
  const RobotTruth out = battery_step(r, false, false, 3600.0, power);
  CHECK(std::abs(out.battery_wh - (7.4 - 0.9 / 0.5)) < 1e-9);
}

TEST_CASE("battery: energy bookkeeping closes to 1e-9 Wh over random steps") {
  PowerParams power;
  Rng rng(17);
  RobotTruth r;
  r.battery_wh = 5.0;
  double expected = 5.0;
  for (int k = 0; k < 500; ++k) {
    r.motor_left.duty = rng.uniform(-1, 1);
    r.motor_right.duty = rng.uniform(-1, 1);
    const bool moving = rng.uniform01() < 0.7;
    const bool charging = rng.uniform01() < 0.3;
    const double dt = rng.uniform(0.01, 0.5);
    const double duty_mag =
        0.5 * (std::abs(r.motor_left.duty) + std::abs(r.motor_right.duty));
    double drawn = power.idle_w;
    if (moving) drawn += (power.move_w - power.idle_w) * duty_mag;
    expected -= drawn * dt / 3600.0;
    if (charging) expected += power.charge_rate_w * dt / 3600.0;
    r = battery_step(r, moving, charging, dt, power);
    CHECK(std::abs(r.battery_wh - expected) < 1e-9);
  }
}

TEST_CASE("encoder noise: all parameters zero is the identity") {
  EncoderNoiseParams params;
  params.scale_sigma = 0.0;
  params.jitter_ticks = 0;
  params.quantize = false;
  EncoderNoiseModel model(params, 99);
  CHECK(model.left_scale() == 1.0);
  CHECK(model.right_scale() == 1.0);
  const EncoderState out = model.inject({123.456, -78.9, 4.2});
  CHECK(out.left_ticks == 123.456);
  CHECK(out.right_ticks == -78.9);
  CHECK(out.timestamp_s == 4.2);
}

TEST_CASE("encoder noise: scale mismatch bends a straight drive") {
  EncoderNoiseParams params;
  params.scale_sigma = 0.0015;
  params.jitter_ticks = 0;
  params.quantize = false;
  EncoderNoiseModel model(params, 4242);
  RobotParams robot;

  // drive straight: equal true ticks both wheels, 1 m total
  const double total_ticks = 1.0 / robot.meters_per_tick();
  const int steps = 100;
  OdometryEstimate est;
  EncoderState prev = model.inject({0, 0, 0});
  for (int k = 1; k <= steps; ++k) {
    const double t = total_ticks * k / steps;
    const EncoderState curr = model.inject({t, t, 0.02 * k});
    est = update_odometry(est, prev, curr, robot);
    prev = curr;
  }
  const double want =
      (model.right_scale() - model.left_scale()) * 1.0 / robot.wheel_base_m;
  CHECK(std::abs(est.pose.theta_rad - want) < 1e-9);

  // drift is proportional to distance: the second meter doubles it
  for (int k = 1; k <= steps; ++k) {
    const double t = total_ticks + total_ticks * k / steps;
    const EncoderState curr =
        model.inject({t, t, 0.02 * (steps + k)});
    est = update_odometry(est, prev, curr, robot);
    prev = curr;
  }
  CHECK(std::abs(est.pose.theta_rad - 2.0 * want) < 1e-9);
}

TEST_CASE("encoder noise: tick jitter walks like sqrt(steps)") {
  double mean_250 = 0.0, mean_1000 = 0.0;
  const int runs = 100;
  for (int i = 0; i < runs; ++i) {
    EncoderNoiseParams params;
    params.scale_sigma = 0.0;
    params.jitter_ticks = 1;
    params.quantize = false;
    EncoderNoiseModel model(params, 1000 + i);
    double at_250 = 0.0, at_1000 = 0.0;
    for (int k = 1; k <= 1000; ++k) {
      const EncoderState out = model.inject({0, 0, 0.02 * k});
      if (k == 250) at_250 = std::abs(out.left_ticks);
      if (k == 1000) at_1000 = std::abs(out.left_ticks);
    }
    mean_250 += at_250 / runs;
    mean_1000 += at_1000 / runs;
  }
  // quadrupling the steps should double the mean excursion
  const double ratio = mean_1000 / mean_250;
  CHECK(ratio > 1.6);
  CHECK(ratio < 2.4);
}
