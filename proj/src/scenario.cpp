#include "swarmsim/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "swarmsim/angles.hpp"
#include "swarmsim/errors.hpp"
#include "swarmsim/rng.hpp"

namespace swarmsim {

using nlohmann::json;

std::string to_string(ScenarioProgram p) {
  switch (p) {
    case ScenarioProgram::kIdle: return "idle";
    case ScenarioProgram::kDrive: return "drive";
    case ScenarioProgram::kRendezvous: return "rendezvous";
    case ScenarioProgram::kSoundRendezvous: return "sound_rendezvous";
    case ScenarioProgram::kFormation: return "formation";
  }
  return "idle";
}

ScenarioProgram program_from_string(const std::string& s) {
  if (s == "idle") return ScenarioProgram::kIdle;
  if (s == "drive") return ScenarioProgram::kDrive;
  if (s == "rendezvous") return ScenarioProgram::kRendezvous;
  if (s == "sound_rendezvous") return ScenarioProgram::kSoundRendezvous;
  if (s == "formation") return ScenarioProgram::kFormation;
  throw ConfigError("algorithm '" + s +
                    "' is not one of idle, drive, rendezvous, "
                    "sound_rendezvous, formation");
}

namespace {

void check_keys(const json& o, const std::string& section,
                const std::set<std::string>& allowed) {
  if (!o.is_object())
    throw ConfigError("'" + section + "' must be an object");
  for (auto it = o.begin(); it != o.end(); ++it)
    if (!allowed.count(it.key()))
      throw ConfigError("unknown config key '" +
                        (section.empty() ? it.key()
                                         : section + "." + it.key()) +
                        "'");
}

double num_or(const json& o, const std::string& section,
              const std::string& key, double def) {
  if (!o.contains(key)) return def;
  if (!o.at(key).is_number())
    throw ConfigError("'" + section + "." + key + "' must be a number");
  return o.at(key).get<double>();
}

int64_t int_or(const json& o, const std::string& section,
               const std::string& key, int64_t def) {
  if (!o.contains(key)) return def;
  if (!o.at(key).is_number_integer())
    throw ConfigError("'" + section + "." + key + "' must be an integer");
  return o.at(key).get<int64_t>();
}

bool bool_or(const json& o, const std::string& section,
             const std::string& key, bool def) {
  if (!o.contains(key)) return def;
  if (!o.at(key).is_boolean())
    throw ConfigError("'" + section + "." + key + "' must be a boolean");
  return o.at(key).get<bool>();
}

std::string str_or(const json& o, const std::string& section,
                   const std::string& key, const std::string& def) {
  if (!o.contains(key)) return def;
  if (!o.at(key).is_string())
    throw ConfigError("'" + section + "." + key + "' must be a string");
  return o.at(key).get<std::string>();
}

bool valid_id(const std::string& id) {
  if (id.empty()) return false;
  for (char c : id)
    if (!((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_'))
      return false;
  return true;
}

}  // namespace

Scenario Scenario::from_json(const json& doc) {
  check_keys(doc, "",
             {"seed", "dt_s", "duration_s", "table", "robot", "plant", "pid",
              "power", "sound_model", "encoder_noise", "camera", "robots",
              "algorithm", "drive", "swarm", "executor", "formation",
              "sound_sources", "charging_stations", "charging", "goto",
              "rates", "stop_on_convergence"});
  Scenario s;
  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_integer() ||
        doc.at("seed").get<int64_t>() < 0)
      throw ConfigError("'seed' must be a non-negative integer");
    s.seed = doc.at("seed").get<uint64_t>();
  }
  s.dt_s = num_or(doc, "", "dt_s", s.dt_s);
  s.duration_s = num_or(doc, "", "duration_s", s.duration_s);
  s.stop_on_convergence =
      bool_or(doc, "", "stop_on_convergence", s.stop_on_convergence);

  if (doc.contains("table")) {
    const json& t = doc.at("table");
    check_keys(t, "table", {"width_m", "height_m"});
    s.table_width_m = num_or(t, "table", "width_m", s.table_width_m);
    s.table_height_m = num_or(t, "table", "height_m", s.table_height_m);
  }

  if (doc.contains("robot")) {
    const json& r = doc.at("robot");
    check_keys(r, "robot",
               {"wheel_radius_m", "wheel_base_m", "ticks_per_rev",
                "max_linear_speed_mps", "max_wheel_speed_radps",
                "footprint_radius_m"});
    s.robot.wheel_radius_m =
        num_or(r, "robot", "wheel_radius_m", s.robot.wheel_radius_m);
    s.robot.wheel_base_m =
        num_or(r, "robot", "wheel_base_m", s.robot.wheel_base_m);
    s.robot.ticks_per_rev = static_cast<int>(
        int_or(r, "robot", "ticks_per_rev", s.robot.ticks_per_rev));
    s.robot.max_linear_speed_mps = num_or(r, "robot", "max_linear_speed_mps",
                                          s.robot.max_linear_speed_mps);
    s.robot.max_wheel_speed_radps = num_or(
        r, "robot", "max_wheel_speed_radps", s.robot.max_wheel_speed_radps);
    s.robot.footprint_radius_m =
        num_or(r, "robot", "footprint_radius_m", s.robot.footprint_radius_m);
  }

  if (doc.contains("plant")) {
    const json& p = doc.at("plant");
    check_keys(p, "plant", {"time_constant_s", "euler"});
    s.plant.time_constant_s =
        num_or(p, "plant", "time_constant_s", s.plant.time_constant_s);
    s.plant.euler = bool_or(p, "plant", "euler", s.plant.euler);
  }
  s.plant.max_wheel_speed_radps = s.robot.max_wheel_speed_radps;

  if (doc.contains("pid")) {
    const json& p = doc.at("pid");
    check_keys(p, "pid",
               {"kp", "ki", "kd", "integral_limit", "output_limit"});
    s.pid.kp = num_or(p, "pid", "kp", s.pid.kp);
    s.pid.ki = num_or(p, "pid", "ki", s.pid.ki);
    s.pid.kd = num_or(p, "pid", "kd", s.pid.kd);
    s.pid.integral_limit =
        num_or(p, "pid", "integral_limit", s.pid.integral_limit);
    s.pid.output_limit = num_or(p, "pid", "output_limit", s.pid.output_limit);
  }

  if (doc.contains("power")) {
    const json& p = doc.at("power");
    check_keys(p, "power",
               {"idle_w", "move_w", "capacity_wh", "charge_rate_w",
                "efficiency", "initial_wh"});
    s.power.idle_w = num_or(p, "power", "idle_w", s.power.idle_w);
    s.power.move_w = num_or(p, "power", "move_w", s.power.move_w);
    s.power.capacity_wh = num_or(p, "power", "capacity_wh",
                                 s.power.capacity_wh);
    s.power.charge_rate_w =
        num_or(p, "power", "charge_rate_w", s.power.charge_rate_w);
    s.power.efficiency = num_or(p, "power", "efficiency", s.power.efficiency);
    s.initial_battery_wh =
        num_or(p, "power", "initial_wh", s.power.capacity_wh);
  } else {
    s.initial_battery_wh = s.power.capacity_wh;
  }

  if (doc.contains("sound_model")) {
    const json& m = doc.at("sound_model");
    check_keys(m, "sound_model",
               {"min_distance_m", "directivity_exponent"});
    s.sound_model.min_distance_m = num_or(m, "sound_model", "min_distance_m",
                                          s.sound_model.min_distance_m);
    s.sound_model.directivity_exponent =
        num_or(m, "sound_model", "directivity_exponent",
               s.sound_model.directivity_exponent);
  }

  if (doc.contains("encoder_noise")) {
    const json& e = doc.at("encoder_noise");
    check_keys(e, "encoder_noise",
               {"scale_sigma", "jitter_ticks", "quantize"});
    s.encoder_noise.scale_sigma =
        num_or(e, "encoder_noise", "scale_sigma",
               s.encoder_noise.scale_sigma);
    s.encoder_noise.jitter_ticks = static_cast<int>(int_or(
        e, "encoder_noise", "jitter_ticks", s.encoder_noise.jitter_ticks));
    s.encoder_noise.quantize =
        bool_or(e, "encoder_noise", "quantize", s.encoder_noise.quantize);
  }

  if (doc.contains("camera")) {
    const json& c = doc.at("camera");
    check_keys(c, "camera",
               {"enabled", "rate_hz", "position_sigma_m", "heading_sigma_rad",
                "drop_probability"});
    s.camera_enabled = bool_or(c, "camera", "enabled", s.camera_enabled);
    s.camera.rate_hz = num_or(c, "camera", "rate_hz", s.camera.rate_hz);
    s.camera.position_sigma_m =
        num_or(c, "camera", "position_sigma_m", s.camera.position_sigma_m);
    s.camera.heading_sigma_rad =
        num_or(c, "camera", "heading_sigma_rad", s.camera.heading_sigma_rad);
    s.camera.drop_probability =
        num_or(c, "camera", "drop_probability", s.camera.drop_probability);
  }

  if (doc.contains("robots")) {
    const json& r = doc.at("robots");
    if (r.is_array()) {
      for (size_t i = 0; i < r.size(); ++i) {
        const json& e = r.at(i);
        const std::string section = "robots[" + std::to_string(i) + "]";
        check_keys(e, section,
                   {"id", "x_m", "y_m", "theta_rad", "battery_wh"});
        RobotSpawn spawn;
        spawn.id = str_or(e, section, "id", "");
        const bool has_x = e.contains("x_m"), has_y = e.contains("y_m");
        if (has_x != has_y)
          throw ConfigError("'" + section +
                            "' must give both x_m and y_m or neither");
        if (has_x)
          spawn.pose = Pose2D{num_or(e, section, "x_m", 0.0),
                              num_or(e, section, "y_m", 0.0),
                              num_or(e, section, "theta_rad", 0.0)};
        else if (e.contains("theta_rad"))
          throw ConfigError("'" + section +
                            "' gives theta_rad without a position");
        if (e.contains("battery_wh"))
          spawn.battery_wh = num_or(e, section, "battery_wh", 0.0);
        s.robots.push_back(std::move(spawn));
      }
    } else if (r.is_object()) {
      check_keys(r, "robots", {"count", "placement"});
      const int64_t count = int_or(r, "robots", "count", 0);
      if (count < 1) throw ConfigError("'robots.count' must be >= 1");
      const std::string placement =
          str_or(r, "robots", "placement", "random");
      if (placement != "random")
        throw ConfigError("'robots.placement' must be \"random\"");
      for (int64_t i = 1; i <= count; ++i)
        s.robots.push_back(RobotSpawn{"r" + std::to_string(i), {}, {}});
    } else {
      throw ConfigError("'robots' must be a list or a {count, placement} "
                        "object");
    }
  }

  s.program = program_from_string(str_or(doc, "", "algorithm", "idle"));

  if (doc.contains("drive")) {
    const json& d = doc.at("drive");
    check_keys(d, "drive", {"segments"});
    if (!d.contains("segments") || !d.at("segments").is_array())
      throw ConfigError("'drive.segments' must be a list");
    for (size_t i = 0; i < d.at("segments").size(); ++i) {
      const json& seg = d.at("segments").at(i);
      const std::string section = "drive.segments[" + std::to_string(i) + "]";
      check_keys(seg, section,
                 {"linear_mps", "angular_radps", "duration_s"});
      s.drive.push_back({num_or(seg, section, "linear_mps", 0.0),
                         num_or(seg, section, "angular_radps", 0.0),
                         num_or(seg, section, "duration_s", 0.0)});
    }
  }

  if (doc.contains("swarm")) {
    const json& w = doc.at("swarm");
    check_keys(w, "swarm",
               {"gain_epsilon", "comm_radius_m", "safety_radius_m",
                "repulsion_gain", "plan_margin_m", "convergence_tol_m",
                "max_steps"});
    s.swarm.gain_epsilon =
        num_or(w, "swarm", "gain_epsilon", s.swarm.gain_epsilon);
    s.swarm.comm_radius_m =
        num_or(w, "swarm", "comm_radius_m", s.swarm.comm_radius_m);
    s.swarm.safety_radius_m =
        num_or(w, "swarm", "safety_radius_m", s.swarm.safety_radius_m);
    s.swarm.repulsion_gain =
        num_or(w, "swarm", "repulsion_gain", s.swarm.repulsion_gain);
    s.swarm.plan_margin_m =
        num_or(w, "swarm", "plan_margin_m", s.swarm.plan_margin_m);
    s.swarm.convergence_tol_m =
        num_or(w, "swarm", "convergence_tol_m", s.swarm.convergence_tol_m);
    s.swarm.max_steps = static_cast<int>(
        int_or(w, "swarm", "max_steps", s.swarm.max_steps));
  }
  s.swarm.footprint_radius_m = s.robot.footprint_radius_m;

  if (doc.contains("executor")) {
    const json& e = doc.at("executor");
    check_keys(e, "executor",
               {"control_period_s", "staleness_bound_s", "stop_speed_mps",
                "max_planar_speed_mps", "k_angular", "position_filter_alpha",
                "position_source"});
    s.control_period_s =
        num_or(e, "executor", "control_period_s", s.control_period_s);
    s.staleness_bound_s =
        num_or(e, "executor", "staleness_bound_s", s.staleness_bound_s);
    s.stop_speed_mps =
        num_or(e, "executor", "stop_speed_mps", s.stop_speed_mps);
    s.max_planar_speed_mps = num_or(e, "executor", "max_planar_speed_mps",
                                    s.max_planar_speed_mps);
    s.k_angular = num_or(e, "executor", "k_angular", s.k_angular);
    s.position_filter_alpha = num_or(e, "executor", "position_filter_alpha",
                                     s.position_filter_alpha);
    const std::string src =
        str_or(e, "executor", "position_source", "camera");
    if (src == "camera") {
      s.position_source = PositionSource::kCamera;
    } else if (src == "odometry") {
      s.position_source = PositionSource::kOdometry;
    } else {
      throw ConfigError(
          "'executor.position_source' must be camera or odometry");
    }
  }

  if (doc.contains("formation")) {
    const json& f = doc.at("formation");
    check_keys(f, "formation", {"offsets"});
    if (!f.contains("offsets") || !f.at("offsets").is_array())
      throw ConfigError("'formation.offsets' must be a list of [x, y] pairs");
    for (const auto& p : f.at("offsets")) {
      if (!p.is_array() || p.size() != 2 || !p.at(0).is_number() ||
          !p.at(1).is_number())
        throw ConfigError(
            "'formation.offsets' must be a list of [x, y] pairs");
      s.formation_offsets.push_back(
          {p.at(0).get<double>(), p.at(1).get<double>()});
    }
  }

  if (doc.contains("sound_sources")) {
    const json& list = doc.at("sound_sources");
    if (!list.is_array()) throw ConfigError("'sound_sources' must be a list");
    for (size_t i = 0; i < list.size(); ++i) {
      const json& e = list.at(i);
      const std::string section = "sound_sources[" + std::to_string(i) + "]";
      check_keys(e, section, {"x_m", "y_m", "power_w", "active"});
      s.sound_sources.push_back({num_or(e, section, "x_m", 0.0),
                                 num_or(e, section, "y_m", 0.0),
                                 num_or(e, section, "power_w", 1.0),
                                 bool_or(e, section, "active", true)});
    }
  }

  if (doc.contains("charging_stations")) {
    const json& list = doc.at("charging_stations");
    if (!list.is_array())
      throw ConfigError("'charging_stations' must be a list");
    for (size_t i = 0; i < list.size(); ++i) {
      const json& e = list.at(i);
      const std::string section =
          "charging_stations[" + std::to_string(i) + "]";
      check_keys(e, section, {"id", "x_m", "y_m", "charge_rate_w"});
      ChargingStation st;
      st.id = str_or(e, section, "id", "");
      st.x_m = num_or(e, section, "x_m", 0.0);
      st.y_m = num_or(e, section, "y_m", 0.0);
      st.charge_rate_w =
          num_or(e, section, "charge_rate_w", s.power.charge_rate_w);
      s.charging_stations.push_back(std::move(st));
    }
  }

  s.charging.enabled = !s.charging_stations.empty();
  if (doc.contains("charging")) {
    const json& c = doc.at("charging");
    check_keys(c, "charging",
               {"enabled", "low_fraction", "resume_fraction", "dock_radius_m",
                "retry_period_s"});
    s.charging.enabled = bool_or(c, "charging", "enabled", s.charging.enabled);
    s.charging.low_fraction =
        num_or(c, "charging", "low_fraction", s.charging.low_fraction);
    s.charging.resume_fraction =
        num_or(c, "charging", "resume_fraction", s.charging.resume_fraction);
    s.charging.dock_radius_m =
        num_or(c, "charging", "dock_radius_m", s.charging.dock_radius_m);
    s.charging.retry_period_s =
        num_or(c, "charging", "retry_period_s", s.charging.retry_period_s);
  }

  if (doc.contains("goto")) {
    const json& g = doc.at("goto");
    check_keys(g, "goto", {"k_linear", "k_angular", "goal_tol_m"});
    s.goto_params.k_linear =
        num_or(g, "goto", "k_linear", s.goto_params.k_linear);
    s.goto_params.k_angular =
        num_or(g, "goto", "k_angular", s.goto_params.k_angular);
    s.goto_params.goal_tol_m =
        num_or(g, "goto", "goal_tol_m", s.goto_params.goal_tol_m);
  }

  if (doc.contains("rates")) {
    const json& r = doc.at("rates");
    check_keys(r, "rates", {"odom_hz", "battery_hz", "sound_hz"});
    s.rates.odom_hz = num_or(r, "rates", "odom_hz", s.rates.odom_hz);
    s.rates.battery_hz = num_or(r, "rates", "battery_hz", s.rates.battery_hz);
    s.rates.sound_hz = num_or(r, "rates", "sound_hz", s.rates.sound_hz);
  }
  return s;
}

void Scenario::resolve_poses() {
  std::sort(robots.begin(), robots.end(),
            [](const RobotSpawn& a, const RobotSpawn& b) {
              return a.id < b.id;
            });
  bool any_missing = false;
  for (const auto& r : robots) any_missing |= !r.pose.has_value();
  if (!any_missing) return;

  const double fp = robot.footprint_radius_m;
  const double pad = 0.02;
  const double lo_x = fp + pad, hi_x = table_width_m - fp - pad;
  const double lo_y = fp + pad, hi_y = table_height_m - fp - pad;
  if (lo_x >= hi_x || lo_y >= hi_y)
    throw ConfigError("table is too small to place robots");

  Rng rng(derive_seed(seed, "placement"));
  const double min_sep = 2.0 * fp + pad;
  for (auto& r : robots) {
    if (r.pose) continue;
    bool placed = false;
    for (int attempt = 0; attempt < 10000 && !placed; ++attempt) {
      const Pose2D candidate{rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y),
                             rng.uniform(-kPi, kPi)};
      bool clear = true;
      for (const auto& other : robots) {
        if (&other == &r || !other.pose) continue;
        if (std::hypot(candidate.x_m - other.pose->x_m,
                       candidate.y_m - other.pose->y_m) < min_sep) {
          clear = false;
          break;
        }
      }
      if (clear) {
        r.pose = candidate;
        placed = true;
      }
    }
    if (!placed)
      throw ConfigError("could not place robot '" + r.id +
                        "' after 10000 attempts");
  }
}

void Scenario::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (dt_s <= 0.0) fail("'dt_s' must be > 0");
  if (duration_s < 0.0) fail("'duration_s' must be >= 0");
  try {
    robot.validate();
  } catch (const InvalidInput& e) {
    fail(e.what());
  }
  const double fp = robot.footprint_radius_m;
  if (table_width_m < 2.0 * fp || table_height_m < 2.0 * fp)
    fail("'table' is smaller than one robot footprint");
  if (plant.time_constant_s <= 0.0)
    fail("'plant.time_constant_s' must be > 0");
  if (pid.output_limit <= 0.0) fail("'pid.output_limit' must be > 0");
  if (pid.integral_limit < 0.0) fail("'pid.integral_limit' must be >= 0");
  if (power.capacity_wh <= 0.0) fail("'power.capacity_wh' must be > 0");
  if (power.idle_w < 0.0 || power.move_w < 0.0)
    fail("'power' draws must be >= 0");
  if (power.efficiency <= 0.0) fail("'power.efficiency' must be > 0");
  if (initial_battery_wh < 0.0 || initial_battery_wh > power.capacity_wh)
    fail("'power.initial_wh' must be within [0, capacity_wh]");
  if (sound_model.min_distance_m <= 0.0)
    fail("'sound_model.min_distance_m' must be > 0");
  if (encoder_noise.scale_sigma < 0.0)
    fail("'encoder_noise.scale_sigma' must be >= 0");
  if (encoder_noise.jitter_ticks < 0)
    fail("'encoder_noise.jitter_ticks' must be >= 0");
  if (camera.rate_hz <= 0.0) fail("'camera.rate_hz' must be > 0");
  if (camera.position_sigma_m < 0.0 || camera.heading_sigma_rad < 0.0)
    fail("'camera' noise sigmas must be >= 0");
  if (camera.drop_probability < 0.0 || camera.drop_probability >= 1.0)
    fail("'camera.drop_probability' must be in [0, 1)");

  if (robots.empty()) fail("'robots' must list at least one robot");
  std::set<std::string> ids;
  for (const auto& r : robots) {
    if (!valid_id(r.id))
      fail("robot id '" + r.id + "' must be non-empty [a-z0-9_]");
    if (!ids.insert(r.id).second) fail("duplicate robot id '" + r.id + "'");
    if (!r.pose) fail("robot '" + r.id + "' has no pose; resolve_poses first");
    if (r.pose->x_m < fp || r.pose->x_m > table_width_m - fp ||
        r.pose->y_m < fp || r.pose->y_m > table_height_m - fp)
      fail("robot '" + r.id + "' starts outside the table bounds");
    if (r.battery_wh &&
        (*r.battery_wh < 0.0 || *r.battery_wh > power.capacity_wh))
      fail("robot '" + r.id + "' battery_wh outside [0, capacity_wh]");
  }
  for (size_t i = 0; i < robots.size(); ++i)
    for (size_t j = i + 1; j < robots.size(); ++j) {
      const double d = std::hypot(robots[i].pose->x_m - robots[j].pose->x_m,
                                  robots[i].pose->y_m - robots[j].pose->y_m);
      if (d < 2.0 * fp)
        fail("robots '" + robots[i].id + "' and '" + robots[j].id +
             "' start closer than two footprint radii");
    }

  if (control_period_s <= 0.0) fail("'executor.control_period_s' must be > 0");
  const double k = control_period_s / dt_s;
  if (std::abs(k - std::round(k)) > 1e-9 || std::round(k) < 1.0)
    fail("'executor.control_period_s' must be a positive multiple of dt_s");
  if (staleness_bound_s <= 0.0)
    fail("'executor.staleness_bound_s' must be > 0");
  if (stop_speed_mps <= 0.0) fail("'executor.stop_speed_mps' must be > 0");
  if (max_planar_speed_mps <= 0.0)
    fail("'executor.max_planar_speed_mps' must be > 0");
  if (position_filter_alpha <= 0.0 || position_filter_alpha > 1.0)
    fail("'executor.position_filter_alpha' must be in (0, 1]");
  if (position_source == PositionSource::kCamera && !camera_enabled &&
      (program == ScenarioProgram::kRendezvous ||
       program == ScenarioProgram::kSoundRendezvous ||
       program == ScenarioProgram::kFormation))
    fail("'executor.position_source' is camera but the camera is disabled");

  const bool swarm_program = program == ScenarioProgram::kRendezvous ||
                             program == ScenarioProgram::kSoundRendezvous ||
                             program == ScenarioProgram::kFormation;
  if (swarm_program) {
    if (robots.size() < 2)
      fail("algorithm '" + to_string(program) + "' needs at least 2 robots");
    try {
      swarm.validate(robots.size());
    } catch (const InvalidInput& e) {
      fail(e.what());
    }
  }
  if (program == ScenarioProgram::kFormation &&
      formation_offsets.size() != robots.size())
    fail("'formation.offsets' must list exactly one offset per robot");
  if (program == ScenarioProgram::kDrive && drive.empty())
    fail("algorithm 'drive' needs at least one drive segment");
  for (size_t i = 0; i < drive.size(); ++i)
    if (drive[i].duration_s <= 0.0)
      fail("'drive.segments[" + std::to_string(i) +
           "].duration_s' must be > 0");

  std::set<std::string> station_ids;
  for (const auto& st : charging_stations) {
    if (!valid_id(st.id))
      fail("station id '" + st.id + "' must be non-empty [a-z0-9_]");
    if (!station_ids.insert(st.id).second)
      fail("duplicate station id '" + st.id + "'");
    if (st.x_m < 0.0 || st.x_m > table_width_m || st.y_m < 0.0 ||
        st.y_m > table_height_m)
      fail("station '" + st.id + "' is outside the table");
    if (st.charge_rate_w < 0.0)
      fail("station '" + st.id + "' charge_rate_w must be >= 0");
  }
  if (charging.enabled && charging_stations.empty())
    fail("'charging.enabled' needs at least one charging station");
  if (charging.low_fraction <= 0.0 || charging.low_fraction >= 1.0)
    fail("'charging.low_fraction' must be in (0, 1)");
  if (charging.resume_fraction <= charging.low_fraction ||
      charging.resume_fraction > 1.0)
    fail("'charging.resume_fraction' must be in (low_fraction, 1]");
  if (charging.dock_radius_m <= 0.0)
    fail("'charging.dock_radius_m' must be > 0");
  if (charging.retry_period_s <= 0.0)
    fail("'charging.retry_period_s' must be > 0");

  if (rates.odom_hz <= 0.0) fail("'rates.odom_hz' must be > 0");
  if (rates.battery_hz <= 0.0) fail("'rates.battery_hz' must be > 0");
  if (rates.sound_hz <= 0.0) fail("'rates.sound_hz' must be > 0");
  if (goto_params.goal_tol_m <= 0.0) fail("'goto.goal_tol_m' must be > 0");
}

size_t Scenario::step_count() const {
  return static_cast<size_t>(std::llround(duration_s / dt_s));
}

std::vector<std::string> Scenario::robot_ids() const {
  std::vector<std::string> ids;
  ids.reserve(robots.size());
  for (const auto& r : robots) ids.push_back(r.id);
  std::sort(ids.begin(), ids.end());
  return ids;
}

ExecutorParams Scenario::executor_defaults() const {
  ExecutorParams p;
  switch (program) {
    case ScenarioProgram::kRendezvous:
      p.algorithm = Algorithm::kRendezvous;
      break;
    case ScenarioProgram::kSoundRendezvous:
      p.algorithm = Algorithm::kSoundRendezvous;
      break;
    case ScenarioProgram::kFormation:
      p.algorithm = Algorithm::kFormation;
      break;
    default:
      p.algorithm = Algorithm::kRendezvous;
      break;
  }
  p.swarm = swarm;
  p.swarm.footprint_radius_m = robot.footprint_radius_m;
  p.source = position_source;
  p.control_period_s = control_period_s;
  p.staleness_bound_s = staleness_bound_s;
  p.stop_speed_mps = stop_speed_mps;
  p.max_planar_speed_mps = max_planar_speed_mps;
  p.k_angular = k_angular;
  p.position_filter_alpha = position_filter_alpha;
  p.robot = robot;
  if (program == ScenarioProgram::kFormation) {
    FormationSpec spec;
    spec.offsets = formation_offsets;
    spec.canonicalize();
    const auto ids = robot_ids();
    for (size_t i = 0; i < ids.size(); ++i) spec.assignment[ids[i]] = i;
    p.formation = std::move(spec);
  }
  return p;
}

nlohmann::json Scenario::resolved_json() const {
  json doc;
  doc["seed"] = seed;
  doc["dt_s"] = dt_s;
  doc["duration_s"] = duration_s;
  doc["stop_on_convergence"] = stop_on_convergence;
  doc["table"] = {{"width_m", table_width_m}, {"height_m", table_height_m}};
  doc["robot"] = {{"wheel_radius_m", robot.wheel_radius_m},
                  {"wheel_base_m", robot.wheel_base_m},
                  {"ticks_per_rev", robot.ticks_per_rev},
                  {"max_linear_speed_mps", robot.max_linear_speed_mps},
                  {"max_wheel_speed_radps", robot.max_wheel_speed_radps},
                  {"footprint_radius_m", robot.footprint_radius_m}};
  doc["plant"] = {{"time_constant_s", plant.time_constant_s},
                  {"euler", plant.euler}};
  doc["pid"] = {{"kp", pid.kp},
                {"ki", pid.ki},
                {"kd", pid.kd},
                {"integral_limit", pid.integral_limit},
                {"output_limit", pid.output_limit}};
  doc["power"] = {{"idle_w", power.idle_w},
                  {"move_w", power.move_w},
                  {"capacity_wh", power.capacity_wh},
                  {"charge_rate_w", power.charge_rate_w},
                  {"efficiency", power.efficiency},
                  {"initial_wh", initial_battery_wh}};
  doc["sound_model"] = {
      {"min_distance_m", sound_model.min_distance_m},
      {"directivity_exponent", sound_model.directivity_exponent}};
  doc["encoder_noise"] = {{"scale_sigma", encoder_noise.scale_sigma},
                          {"jitter_ticks", encoder_noise.jitter_ticks},
                          {"quantize", encoder_noise.quantize}};
  doc["camera"] = {{"enabled", camera_enabled},
                   {"rate_hz", camera.rate_hz},
                   {"position_sigma_m", camera.position_sigma_m},
                   {"heading_sigma_rad", camera.heading_sigma_rad},
                   {"drop_probability", camera.drop_probability}};
  json robot_list = json::array();
  for (const auto& r : robots) {
    json e;
    e["id"] = r.id;
    if (r.pose) {
      e["x_m"] = r.pose->x_m;
      e["y_m"] = r.pose->y_m;
      e["theta_rad"] = r.pose->theta_rad;
    }
    if (r.battery_wh) e["battery_wh"] = *r.battery_wh;
    robot_list.push_back(std::move(e));
  }
  doc["robots"] = std::move(robot_list);
  doc["algorithm"] = to_string(program);
  if (!drive.empty()) {
    json segs = json::array();
    for (const auto& seg : drive)
      segs.push_back({{"linear_mps", seg.linear_mps},
                      {"angular_radps", seg.angular_radps},
                      {"duration_s", seg.duration_s}});
    doc["drive"] = {{"segments", std::move(segs)}};
  }
  doc["swarm"] = {{"gain_epsilon", swarm.gain_epsilon},
                  {"comm_radius_m", swarm.comm_radius_m},
                  {"safety_radius_m", swarm.safety_radius_m},
                  {"repulsion_gain", swarm.repulsion_gain},
                  {"plan_margin_m", swarm.plan_margin_m},
                  {"convergence_tol_m", swarm.convergence_tol_m},
                  {"max_steps", swarm.max_steps}};
  doc["executor"] = {
      {"control_period_s", control_period_s},
      {"staleness_bound_s", staleness_bound_s},
      {"stop_speed_mps", stop_speed_mps},
      {"max_planar_speed_mps", max_planar_speed_mps},
      {"k_angular", k_angular},
      {"position_filter_alpha", position_filter_alpha},
      {"position_source",
       position_source == PositionSource::kCamera ? "camera" : "odometry"}};
  if (!formation_offsets.empty()) {
    json offs = json::array();
    for (const auto& o : formation_offsets)
      offs.push_back(json::array({o.x, o.y}));
    doc["formation"] = {{"offsets", std::move(offs)}};
  }
  if (!sound_sources.empty()) {
    json list = json::array();
    for (const auto& src : sound_sources)
      list.push_back({{"x_m", src.x_m},
                      {"y_m", src.y_m},
                      {"power_w", src.power_w},
                      {"active", src.active}});
    doc["sound_sources"] = std::move(list);
  }
  if (!charging_stations.empty()) {
    json list = json::array();
    for (const auto& st : charging_stations)
      list.push_back({{"id", st.id},
                      {"x_m", st.x_m},
                      {"y_m", st.y_m},
                      {"charge_rate_w", st.charge_rate_w}});
    doc["charging_stations"] = std::move(list);
  }
  doc["charging"] = {{"enabled", charging.enabled},
                     {"low_fraction", charging.low_fraction},
                     {"resume_fraction", charging.resume_fraction},
                     {"dock_radius_m", charging.dock_radius_m},
                     {"retry_period_s", charging.retry_period_s}};
  doc["goto"] = {{"k_linear", goto_params.k_linear},
                 {"k_angular", goto_params.k_angular},
                 {"goal_tol_m", goto_params.goal_tol_m}};
  doc["rates"] = {{"odom_hz", rates.odom_hz},
                  {"battery_hz", rates.battery_hz},
                  {"sound_hz", rates.sound_hz}};
  return doc;
}

void apply_override(json& doc, const std::string& dotted_key,
                    const std::string& value) {
  if (dotted_key.empty()) throw ConfigError("--set key must not be empty");
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    const size_t dot = dotted_key.find('.', start);
    if (dot == std::string::npos) {
      parts.push_back(dotted_key.substr(start));
      break;
    }
    parts.push_back(dotted_key.substr(start, dot - start));
    start = dot + 1;
  }
  for (const auto& p : parts)
    if (p.empty())
      throw ConfigError("--set key '" + dotted_key +
                        "' has an empty segment");

  json* node = &doc;
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    const std::string& p = parts[i];
    if (node->is_array()) {
      size_t idx = 0;
      try {
        idx = std::stoul(p);
      } catch (const std::exception&) {
        throw ConfigError("--set key '" + dotted_key + "': '" + p +
                          "' is not a list index");
      }
      if (idx >= node->size())
        throw ConfigError("--set key '" + dotted_key + "': index " + p +
                          " is out of range");
      node = &(*node)[idx];
    } else {
      node = &(*node)[p];
    }
  }
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::parse_error&) {
    parsed = value;  // bare strings like `camera` need no quotes
  }
  const std::string& last = parts.back();
  if (node->is_array()) {
    size_t idx = 0;
    try {
      idx = std::stoul(last);
    } catch (const std::exception&) {
      throw ConfigError("--set key '" + dotted_key + "': '" + last +
                        "' is not a list index");
    }
    if (idx >= node->size())
      throw ConfigError("--set key '" + dotted_key + "': index " + last +
                        " is out of range");
    (*node)[idx] = parsed;
  } else {
    (*node)[last] = parsed;
  }
}

Scenario load_scenario_file(const std::string& path,
                            const std::vector<std::string>& overrides,
                            std::optional<uint64_t> seed_override) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open scenario file '" + path + "'");
  json doc;
  try {
    doc = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ConfigError("scenario '" + path + "': " + e.what());
  }
  for (const auto& ov : overrides) {
    const size_t eq = ov.find('=');
    if (eq == std::string::npos || eq == 0)
      throw ConfigError("--set expects key=value, got '" + ov + "'");
    apply_override(doc, ov.substr(0, eq), ov.substr(eq + 1));
  }
  if (seed_override) doc["seed"] = *seed_override;
  Scenario s = Scenario::from_json(doc);
  s.resolve_poses();
  s.validate();
  return s;
}

}  // namespace swarmsim
