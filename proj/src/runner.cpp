#include "swarmsim/runner.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "swarmsim/angles.hpp"
#include "swarmsim/bus.hpp"
#include "swarmsim/errors.hpp"
#include "swarmsim/metrics.hpp"
#include "swarmsim/motor.hpp"
#include "swarmsim/odometry.hpp"
#include "swarmsim/rng.hpp"
#include "swarmsim/tracking.hpp"

namespace swarmsim {

namespace {

// Everything that runs on one robot: the per-wheel velocity PIDs, dead
// reckoning from the (possibly corrupted) encoder readings, sensor topic
// publication, and the battery-management routine that requests a charging
// station, drives to the pad and releases it when full.
class RobotAgent {
 public:
  RobotAgent(Bus& bus, const Scenario& sc, const std::string& id,
             const Pose2D& start, double initial_battery_wh,
             uint64_t encoder_seed)
      : bus_(&bus),
        sc_(&sc),
        id_(id),
        noise_(sc.encoder_noise, encoder_seed),
        battery_wh_(initial_battery_wh) {
    odom_.pose = start;
    odom_pub_ = bus.advertise(topic_odom(id), sc.rates.odom_hz);
    battery_pub_ = bus.advertise(topic_battery(id), sc.rates.battery_hz);
    sound_pub_ = bus.advertise(topic_sound(id), sc.rates.sound_hz);
    // Reserved channels: advertised so the topic table is complete, never
    // populated by this simulator.
    imu_pub_ = bus.advertise(topic_imu(id));
    color_pub_ = bus.advertise(topic_color(id));
    env_pub_ = bus.advertise(topic_env(id));
    cmd_sub_ = bus.subscribe(topic_cmd_vel(id), 4);
    pos_sub_ = bus.subscribe(topic_position_cmd(id), 4);
  }

  struct Duties {
    double left = 0.0;
    double right = 0.0;
    Twist twist;  // the saturated twist the PIDs tracked
  };

  // One control cycle: pick a twist (charging routine first, then fresh
  // position or velocity commands), convert to wheel setpoints and run the
  // PIDs against the encoder-derived wheel speeds.
  Duties control(double now_s, double dt_s,
                 const std::map<std::string, Pose2D>& camera_poses,
                 double camera_stamp_s, bool charging_now) {
    for (auto& env : cmd_sub_.drain()) last_cmd_ = std::move(env);
    for (auto& env : pos_sub_.drain()) last_pos_cmd_ = std::move(env);

    const bool camera_fresh =
        camera_poses.count(id_) != 0 &&
        now_s - camera_stamp_s <= sc_->staleness_bound_s;
    const Pose2D est = camera_fresh ? camera_poses.at(id_) : odom_.pose;

    charging_update(now_s, est, charging_now);

    Twist twist;
    if (state_ == ChargeState::kSeeking && dock_) {
      twist = seek_twist(est, camera_poses, camera_fresh, dt_s);
    } else if (state_ == ChargeState::kCharging ||
               state_ == ChargeState::kReleasing) {
      twist = Twist{};  // parked on the pad
    } else if (last_pos_cmd_ &&
               now_s - last_pos_cmd_->stamp_s <= sc_->staleness_bound_s) {
      const Payload& p = last_pos_cmd_->payload;
      twist = position_controller(
          est, Vec2{p.at("x_m").get<double>(), p.at("y_m").get<double>()},
          sc_->goto_params, sc_->robot);
    } else if (last_cmd_ &&
               now_s - last_cmd_->stamp_s <= sc_->staleness_bound_s) {
      const Payload& p = last_cmd_->payload;
      twist = Twist{p.at("v_mps").get<double>(),
                    p.at("w_radps").get<double>()};
    }

    const Twist sat = saturate_twist(twist, sc_->robot);
    const WheelSpeeds target = inverse_kinematics(sat, sc_->robot);

    // Wheel speeds from the last two readings, one interval behind.
    double left_radps = 0.0, right_radps = 0.0;
    if (cur_meas_.timestamp_s > prev_meas_.timestamp_s) {
      const double interval = cur_meas_.timestamp_s - prev_meas_.timestamp_s;
      const double a = sc_->robot.radians_per_tick();
      left_radps = (cur_meas_.left_ticks - prev_meas_.left_ticks) * a / interval;
      right_radps =
          (cur_meas_.right_ticks - prev_meas_.right_ticks) * a / interval;
    }
    // Stop clamp: a zero setpoint with the wheels nearly stopped coasts and
    // clears the integrators, instead of hunting over leftover tick
    // fractions forever.
    if (std::abs(target.left_radps) < 0.05 &&
        std::abs(target.right_radps) < 0.05 && std::abs(left_radps) < 0.25 &&
        std::abs(right_radps) < 0.25) {
      pid_left_ = MotorState{};
      pid_right_ = MotorState{};
      return Duties{0.0, 0.0, sat};
    }
    pid_left_ = pid_step(pid_left_, target.left_radps, left_radps, dt_s,
                         sc_->pid);
    pid_right_ = pid_step(pid_right_, target.right_radps, right_radps, dt_s,
                          sc_->pid);
    return Duties{pid_left_.duty, pid_right_.duty, sat};
  }

  // Post-physics sensing: corrupt the true encoder reading, advance dead
  // reckoning, publish the standard sensor topics (the bus rate-gates them).
  void sense(const RobotTruth& truth, double now_s, double sound_w_m2) {
    prev_meas_ = cur_meas_;
    cur_meas_ = noise_.inject(truth.encoders);
    odom_ = update_odometry(odom_, prev_meas_, cur_meas_, sc_->robot);
    battery_wh_ = truth.battery_wh;

    odom_pub_.publish(Payload{{"x_m", odom_.pose.x_m},
                              {"y_m", odom_.pose.y_m},
                              {"theta_rad", odom_.pose.theta_rad},
                              {"v_mps", odom_.body_twist.linear_mps},
                              {"w_radps", odom_.body_twist.angular_radps},
                              {"stamp_s", now_s}});
    battery_pub_.publish(
        Payload{{"battery_wh", battery_wh_},
                {"fraction", battery_wh_ / sc_->power.capacity_wh},
                {"stamp_s", now_s}});
    sound_pub_.publish(
        Payload{{"intensity_w_m2", sound_w_m2}, {"stamp_s", now_s}});
  }

  const OdometryEstimate& odometry() const { return odom_; }
  const EncoderState& measured() const { return cur_meas_; }

 private:
  enum class ChargeState {
    kNormal,
    kRequesting,
    kBackoff,
    kSeeking,
    kCharging,
    kReleasing,
  };

  void send_charge_request(const Pose2D& est) {
    pending_ = bus_->request(service_charging_request(),
                             Payload{{"robot_id", id_},
                                     {"x_m", est.x_m},
                                     {"y_m", est.y_m},
                                     {"release", false}},
                             1.0);
    state_ = ChargeState::kRequesting;
  }

  void charging_update(double now_s, const Pose2D& est, bool charging_now) {
    if (!sc_->charging.enabled) return;
    const double fraction = battery_wh_ / sc_->power.capacity_wh;
    switch (state_) {
      case ChargeState::kNormal:
        if (fraction < sc_->charging.low_fraction) send_charge_request(est);
        break;
      case ChargeState::kRequesting: {
        if (!pending_.ready()) break;
        bool granted = false;
        try {
          const Payload reply = pending_.get();
          if (reply.contains("station_id")) {
            dock_ = Vec2{reply.at("x_m").get<double>(),
                         reply.at("y_m").get<double>()};
            granted = true;
          }
        } catch (const SimError&) {
          // Denials and timeouts both fall through to the retry timer.
        }
        if (granted) {
          state_ = ChargeState::kSeeking;
        } else {
          state_ = ChargeState::kBackoff;
          retry_at_s_ = now_s + sc_->charging.retry_period_s;
        }
        break;
      }
      case ChargeState::kBackoff:
        if (now_s >= retry_at_s_) send_charge_request(est);
        break;
      case ChargeState::kSeeking:
        if (charging_now) state_ = ChargeState::kCharging;
        break;
      case ChargeState::kCharging:
        if (fraction >= sc_->charging.resume_fraction) {
          pending_ = bus_->request(
              service_charging_request(),
              Payload{{"robot_id", id_}, {"release", true}}, 1.0);
          state_ = ChargeState::kReleasing;
        }
        break;
      case ChargeState::kReleasing:
        if (pending_.ready()) {
          try {
            pending_.get();
          } catch (const SimError&) {
          }
          dock_.reset();
          state_ = ChargeState::kNormal;
        }
        break;
    }
  }

  // Go-to-goal toward the pad, with the planned one-step displacement run
  // through the shared avoidance so a docking robot brakes for traffic.
  Twist seek_twist(const Pose2D& est,
                   const std::map<std::string, Pose2D>& camera_poses,
                   bool camera_fresh, double dt_s) {
    const Twist goal = position_controller(est, *dock_, sc_->goto_params,
                                           sc_->robot);
    if (!camera_fresh || camera_poses.size() < 2) return goal;

    std::vector<Vec2> positions;
    std::vector<Vec2> plans(camera_poses.size());
    size_t own = 0;
    positions.reserve(camera_poses.size());
    for (const auto& [rid, p] : camera_poses) {
      if (rid == id_) own = positions.size();
      positions.push_back({p.x_m, p.y_m});
    }
    const Twist sat = saturate_twist(goal, sc_->robot);
    plans[own] = Vec2{sat.linear_mps * std::cos(est.theta_rad),
                      sat.linear_mps * std::sin(est.theta_rad)} *
                 dt_s;
    const std::vector<Vec2> adjusted =
        collision_avoidance(positions, plans, sc_->swarm);
    const Vec2 delta = adjusted[own] - plans[own];
    if (std::abs(delta.x) < 1e-12 && std::abs(delta.y) < 1e-12) return goal;
    return planar_velocity_to_twist(adjusted[own] / dt_s, est.theta_rad,
                                    sc_->k_angular, sc_->robot);
  }

  Bus* bus_;
  const Scenario* sc_;
  std::string id_;
  EncoderNoiseModel noise_;
  double battery_wh_;

  Publisher odom_pub_, battery_pub_, sound_pub_;
  Publisher imu_pub_, color_pub_, env_pub_;
  Subscription cmd_sub_, pos_sub_;
  std::optional<TopicEnvelope> last_cmd_, last_pos_cmd_;

  MotorState pid_left_, pid_right_;
  EncoderState prev_meas_, cur_meas_;
  OdometryEstimate odom_;

  ChargeState state_ = ChargeState::kNormal;
  PendingReply pending_;
  std::optional<Vec2> dock_;
  double retry_at_s_ = 0.0;
};

bool is_swarm_program(ScenarioProgram p) {
  return p == ScenarioProgram::kRendezvous ||
         p == ScenarioProgram::kSoundRendezvous ||
         p == ScenarioProgram::kFormation;
}

}  // namespace

RunResult run_scenario(const Scenario& scenario) {
  Scenario s = scenario;
  s.resolve_poses();
  s.validate();

  const double dt = s.dt_s;
  const size_t steps = s.step_count();
  const std::vector<std::string> ids = s.robot_ids();

  WorldState world;
  world.table_width_m = s.table_width_m;
  world.table_height_m = s.table_height_m;
  world.sound_sources = s.sound_sources;
  world.charging_stations = s.charging_stations;
  world.rng_seed = s.seed;
  for (const auto& spawn : s.robots) {
    RobotTruth r;
    r.id = spawn.id;
    r.pose = *spawn.pose;
    r.battery_wh = spawn.battery_wh.value_or(s.initial_battery_wh);
    world.robots.push_back(std::move(r));
  }

  WorldConfig wcfg;
  wcfg.robot = s.robot;
  wcfg.plant = s.plant;
  wcfg.power = s.power;
  wcfg.sound = s.sound_model;
  wcfg.encoder_quantize = s.encoder_noise.quantize;

  Bus bus;

  std::optional<TrackingServer> tracker;
  Publisher camera_pub;
  if (s.camera_enabled) {
    tracker.emplace(s.camera, derive_seed(s.seed, "camera"));
    camera_pub = bus.advertise(topic_global_position());
  }

  const std::set<std::string> roster(ids.begin(), ids.end());
  ChargingCounters counters;
  if (s.charging.enabled) {
    bus.register_responder(
        service_charging_request(), [&](const Payload& body) -> Payload {
          if (!body.contains("robot_id") || !body.at("robot_id").is_string())
            throw InvalidRequest("charging request needs a robot_id string");
          const std::string rid = body.at("robot_id").get<std::string>();
          if (body.value("release", false)) {
            const bool held =
                release_charging_station(world.charging_stations, rid);
            if (held) ++counters.releases;
            return Payload{{"released", held}};
          }
          const Pose2D at{body.value("x_m", 0.0), body.value("y_m", 0.0), 0.0};
          const auto station = assign_charging_station(
              world.charging_stations, rid, at, roster);
          if (!station) {
            ++counters.denials;
            return Payload::object();  // empty reply = no free station
          }
          ++counters.grants;
          return Payload{{"station_id", station->id},
                         {"x_m", station->x_m},
                         {"y_m", station->y_m}};
        });
  }

  std::vector<std::unique_ptr<RobotAgent>> agents;
  agents.reserve(s.robots.size());
  for (const auto& spawn : s.robots) {
    agents.push_back(std::make_unique<RobotAgent>(
        bus, s, spawn.id, *spawn.pose,
        spawn.battery_wh.value_or(s.initial_battery_wh),
        derive_seed(s.seed, "encoder/" + spawn.id)));
  }

  ExecutorParams exec_params;
  std::optional<SwarmExecutor> executor;
  size_t exec_every = 1;
  if (is_swarm_program(s.program)) {
    exec_params = s.executor_defaults();
    executor.emplace(bus, exec_params, ids);
    exec_every = static_cast<size_t>(std::llround(s.control_period_s / dt));
  }

  std::map<std::string, Publisher> drive_pubs;
  if (s.program == ScenarioProgram::kDrive) {
    for (const auto& id : ids) drive_pubs[id] = bus.advertise(topic_cmd_vel(id));
  }
  const auto drive_twist_at = [&s](double t) {
    double end = 0.0;
    for (const auto& seg : s.drive) {
      end += seg.duration_s;
      if (t < end - 1e-12) return Twist{seg.linear_mps, seg.angular_radps};
    }
    return Twist{};  // script exhausted: command a stop
  };

  RunResult result;
  result.header.version = 1;
  result.header.dt_s = dt;
  result.header.wheel_radius_m = s.robot.wheel_radius_m;
  result.header.robot_ids = ids;
  result.header.algorithm = to_string(s.program);
  if (s.program == ScenarioProgram::kFormation)
    result.header.formation_offsets = exec_params.formation.offsets;
  result.records.reserve(steps * ids.size());

  std::map<std::string, Pose2D> camera_latest;
  double camera_stamp = -1e300;
  std::vector<Twist> cmds(ids.size());

  // After the executor declares convergence the loop keeps going long
  // enough for the stop commands to wind the plants down, so the log ends
  // with the swarm actually at rest.
  const size_t brake_steps = static_cast<size_t>(std::llround(1.5 / dt));
  std::optional<size_t> stop_after;

  for (size_t step = 0; step < steps; ++step) {
    const double t = static_cast<double>(step) * dt;
    bus.step(t);

    if (tracker) {
      for (const CameraFrame& frame : tracker->poll(world)) {
        Payload robots = Payload::array();
        for (const auto& rep : frame.reports) {
          robots.push_back(Payload{{"robot_id", rep.robot_id},
                                   {"x_m", rep.pose.x_m},
                                   {"y_m", rep.pose.y_m},
                                   {"theta_rad", rep.pose.theta_rad},
                                   {"stamp_s", rep.stamp_s}});
          camera_latest[rep.robot_id] = rep.pose;
        }
        camera_stamp = frame.stamp_s;
        camera_pub.publish(robots);
      }
    }

    if (s.program == ScenarioProgram::kDrive) {
      const Twist tw = drive_twist_at(t);
      const Payload msg{{"v_mps", tw.linear_mps}, {"w_radps", tw.angular_radps}};
      for (auto& [id, pub] : drive_pubs) pub.publish(msg);
    }

    if (executor && step % exec_every == 0) executor->tick(t);

    // Pad adjacency feeds both the agents' charge routine and the battery
    // model this step.
    for (auto& r : world.robots) {
      bool on_pad = false;
      for (const auto& st : world.charging_stations) {
        if (st.occupied_by && *st.occupied_by == r.id) {
          on_pad = std::hypot(r.pose.x_m - st.x_m, r.pose.y_m - st.y_m) <=
                   s.charging.dock_radius_m;
          break;
        }
      }
      r.charging = on_pad;
    }

    for (size_t i = 0; i < agents.size(); ++i) {
      const RobotAgent::Duties duties = agents[i]->control(
          t, dt, camera_latest, camera_stamp, world.robots[i].charging);
      world.robots[i].commanded_duty_left = duties.left;
      world.robots[i].commanded_duty_right = duties.right;
      cmds[i] = duties.twist;
    }

    world_step(world, dt, wcfg);
    const double t_next = static_cast<double>(step + 1) * dt;

    for (size_t i = 0; i < agents.size(); ++i) {
      const RobotTruth& r = world.robots[i];
      const double sound =
          sample_microphone(r, world.sound_sources, wcfg.sound);
      agents[i]->sense(r, t_next, sound);

      TrajectoryRecord rec;
      rec.step = static_cast<int64_t>(step);
      rec.t_s = t_next;
      rec.robot_id = r.id;
      rec.truth = r.pose;
      rec.odom = agents[i]->odometry().pose;
      if (auto it = camera_latest.find(r.id); it != camera_latest.end())
        rec.camera = it->second;
      rec.cmd = cmds[i];
      rec.wheels = WheelSpeeds{r.motor_left.wheel_speed_radps,
                               r.motor_right.wheel_speed_radps};
      rec.left_ticks = agents[i]->measured().left_ticks;
      rec.right_ticks = agents[i]->measured().right_ticks;
      rec.battery_wh = r.battery_wh;
      rec.sound = sound;
      result.records.push_back(std::move(rec));
    }

    // Hard invariants; tripping one means the physics or a controller broke.
    for (size_t i = 0; i < world.robots.size(); ++i) {
      const Pose2D& p = world.robots[i].pose;
      if (!std::isfinite(p.x_m) || !std::isfinite(p.y_m) ||
          !std::isfinite(p.theta_rad))
        throw RuntimeViolation("step " + std::to_string(step) + ": robot '" +
                               world.robots[i].id + "' pose is not finite");
      for (size_t j = i + 1; j < world.robots.size(); ++j) {
        const Pose2D& q = world.robots[j].pose;
        const double d = std::hypot(p.x_m - q.x_m, p.y_m - q.y_m);
        if (d < 2.0 * s.robot.footprint_radius_m - 1e-12)
          throw RuntimeViolation(
              "step " + std::to_string(step) + ": robots '" +
              world.robots[i].id + "' and '" + world.robots[j].id +
              "' overlap at distance " + format_number(d) + " m");
      }
    }

    result.steps_run = step + 1;
    if (executor && s.stop_on_convergence && executor->status().converged &&
        !stop_after)
      stop_after = step + brake_steps;
    if (stop_after && step >= *stop_after) break;
  }

  result.final_world = std::move(world);
  if (executor) {
    result.executor_present = true;
    result.executor = executor->status();
  }
  result.charging = counters;
  return result;
}

nlohmann::json run_summary_json(const RunResult& result, uint64_t seed) {
  nlohmann::json j;
  j["seed"] = seed;
  j["steps_run"] = result.steps_run;
  j["sim_time_s"] = result.final_world.sim_time_s;
  j["robots"] = result.header.robot_ids;
  if (result.executor_present) {
    j["executor"] = {
        {"ticks", result.executor.ticks},
        {"stale_ticks", result.executor.stale_ticks},
        {"converged", result.executor.converged},
        {"convergence_tick", result.executor.convergence_tick},
        {"last_max_pairwise_m", result.executor.last_max_pairwise_m},
        {"last_max_planar_speed_mps", result.executor.last_max_planar_speed_mps},
    };
  } else {
    j["executor"] = nullptr;
  }
  j["charging"] = {{"grants", result.charging.grants},
                   {"denials", result.charging.denials},
                   {"releases", result.charging.releases}};
  nlohmann::json batteries = nlohmann::json::object();
  for (const auto& r : result.final_world.robots)
    batteries[r.id] = r.battery_wh;
  j["final_battery_wh"] = batteries;
  return j;
}

void write_run_artifacts(const Scenario& scenario, const RunResult& result,
                         const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  const std::string traj_path = (fs::path(out_dir) / "trajectory.jsonl").string();
  write_trajectory(traj_path, result.header, result.records);

  // Metrics come from re-reading the file just written, so summary.json can
  // never drift from what a later `metrics` invocation reports.
  const TrajectoryFile reread = read_trajectory(traj_path);
  nlohmann::json summary;
  summary["metrics"] = compute_metrics(reread);
  summary["run"] = run_summary_json(result, scenario.seed);
  {
    const fs::path p = fs::path(out_dir) / "summary.json";
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InvalidInput("cannot write '" + p.string() + "'");
    out << summary.dump(2) << '\n';
  }

  Scenario resolved = scenario;
  resolved.resolve_poses();
  {
    const fs::path p = fs::path(out_dir) / "config.resolved.json";
    std::ofstream out(p, std::ios::binary);
    if (!out) throw InvalidInput("cannot write '" + p.string() + "'");
    out << resolved.resolved_json().dump(2) << '\n';
  }
}

}  // namespace swarmsim
