#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarmsim/controllers.hpp"
#include "swarmsim/kinematics.hpp"
#include "swarmsim/motor.hpp"
#include "swarmsim/tracking.hpp"
#include "swarmsim/world.hpp"

namespace swarmsim {

// What the robots do for the run. The swarm algorithms need >= 2 robots; a
// drive program replays scripted twist segments on every robot; idle runs
// the physics with zero commands.
enum class ScenarioProgram {
  kIdle,
  kDrive,
  kRendezvous,
  kSoundRendezvous,
  kFormation,
};

std::string to_string(ScenarioProgram p);
ScenarioProgram program_from_string(const std::string& s);

struct DriveSegment {
  double linear_mps = 0.0;
  double angular_radps = 0.0;
  double duration_s = 0.0;
};

struct RobotSpawn {
  std::string id;
  std::optional<Pose2D> pose;  // empty = placed randomly
  std::optional<double> battery_wh;
};

struct ChargingPolicy {
  bool enabled = false;  // resolves to "stations present" when unset in JSON
  double low_fraction = 0.15;
  double resume_fraction = 0.95;
  double dock_radius_m = 0.08;
  double retry_period_s = 5.0;
};

struct TopicRates {
  double odom_hz = 20.0;
  double battery_hz = 1.0;
  double sound_hz = 10.0;
};

struct Scenario {
  uint64_t seed = 0;
  double dt_s = 0.05;
  double duration_s = 20.0;
  double table_width_m = 2.5;
  double table_height_m = 1.75;

  RobotParams robot;
  MotorPlantParams plant;
  PidGains pid;
  PowerParams power;
  double initial_battery_wh = 7.4;
  SoundModelParams sound_model;
  EncoderNoiseParams encoder_noise;

  bool camera_enabled = true;
  TrackingParams camera;

  std::vector<RobotSpawn> robots;
  ScenarioProgram program = ScenarioProgram::kIdle;
  std::vector<DriveSegment> drive;

  SwarmConfig swarm;
  ExecutorParams executor_defaults() const;
  double control_period_s = 0.05;
  double staleness_bound_s = 0.5;
  double stop_speed_mps = 0.001;
  double max_planar_speed_mps = 0.15;
  double k_angular = 4.0;
  double position_filter_alpha = 1.0;
  PositionSource position_source = PositionSource::kCamera;
  std::vector<Vec2> formation_offsets;  // assigned to sorted ids by index

  std::vector<SoundSource> sound_sources;
  std::vector<ChargingStation> charging_stations;
  ChargingPolicy charging;
  GoToGoalParams goto_params;
  TopicRates rates;
  bool stop_on_convergence = true;

  // Fails with a ConfigError naming the offending field. Robots with no
  // explicit pose are placed by seeded rejection sampling, so validation of
  // placement happens after resolve_poses().
  void validate() const;

  // Fills in random poses (and sorts robots by id). Idempotent.
  void resolve_poses();

  size_t step_count() const;
  std::vector<std::string> robot_ids() const;

  // Full effective config including every default, sorted keys.
  nlohmann::json resolved_json() const;

  static Scenario from_json(const nlohmann::json& doc);
};

// `--set a.b.c=value` override on the raw document; value parses as JSON
// when it can, else as a string.
void apply_override(nlohmann::json& doc, const std::string& dotted_key,
                    const std::string& value);

Scenario load_scenario_file(const std::string& path,
                            const std::vector<std::string>& overrides = {},
                            std::optional<uint64_t> seed_override = {});

}  // namespace swarmsim
