#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swarmsim/kinematics.hpp"
#include "swarmsim/motor.hpp"
#include "swarmsim/odometry.hpp"
#include "swarmsim/rng.hpp"

namespace swarmsim {

struct SoundSource {
  double x_m = 0.0;
  double y_m = 0.0;
  double power_w = 1.0;
  bool active = true;
};

// Inverse-square propagation with an optional cosine-power directivity lobe.
// directivity_exponent = 0 disables the lobe entirely (isotropic pickup).
struct SoundModelParams {
  double min_distance_m = 0.05;  // avoids the 1/d^2 singularity
  double directivity_exponent = 0.0;
};

struct ChargingStation {
  std::string id;
  double x_m = 0.0;
  double y_m = 0.0;
  std::optional<std::string> occupied_by;
  double charge_rate_w = 2.0;
};

struct PowerParams {
  double idle_w = 0.9;
  double move_w = 1.5;
  double capacity_wh = 7.4;  // 2000 mAh at 3.7 V
  double charge_rate_w = 2.0;
  double efficiency = 1.0;  // divides the drawn power; 1.0 = nominal
};

struct EncoderNoiseParams {
  double scale_sigma = 0.0015;  // per-wheel scale error, drawn once per run
  int jitter_ticks = 0;         // per-step additive integer jitter amplitude
  bool quantize = true;         // floor readings to integer counts
};

// Measurement-channel corruption of encoder readings. The per-wheel scale is
// drawn once at construction (uniform in +-scale_sigma); jitter accumulates
// into the count each step, so lost/extra ticks drift like a random walk.
class EncoderNoiseModel {
 public:
  EncoderNoiseModel() = default;
  EncoderNoiseModel(const EncoderNoiseParams& params, uint64_t seed);

  // Produces the measured reading for a true reading; advances the jitter
  // walk by one step. Identity when all noise parameters are zero.
  EncoderState inject(const EncoderState& truth);

  double left_scale() const { return left_scale_; }
  double right_scale() const { return right_scale_; }

 private:
  EncoderNoiseParams params_;
  Rng rng_{0};
  double left_scale_ = 1.0;
  double right_scale_ = 1.0;
  double left_jitter_accum_ = 0.0;
  double right_jitter_accum_ = 0.0;
};

struct RobotTruth {
  std::string id;
  Pose2D pose;
  MotorState motor_left;
  MotorState motor_right;
  // Fractional tick accumulators; no tick is ever lost across steps.
  double left_tick_accum = 0.0;
  double right_tick_accum = 0.0;
  EncoderState encoders;  // exposed reading (floored when quantizing)
  double battery_wh = 7.4;
  bool charging = false;
  // Duty requested by the robot's controller, applied on the next step.
  double commanded_duty_left = 0.0;
  double commanded_duty_right = 0.0;
};

struct WorldState {
  double sim_time_s = 0.0;
  std::vector<RobotTruth> robots;
  double table_width_m = 2.5;
  double table_height_m = 1.75;
  std::vector<SoundSource> sound_sources;
  std::vector<ChargingStation> charging_stations;
  uint64_t rng_seed = 0;
};

struct WorldConfig {
  RobotParams robot;
  MotorPlantParams plant;
  PowerParams power;
  SoundModelParams sound;
  bool encoder_quantize = true;
};

// Advances every robot by dt: motor plants, exact pose integration, table
// bounds clamp, fractional tick accumulation, battery drain/charge. Fully
// deterministic given the command inputs.
void world_step(WorldState& world, double dt_s, const WorldConfig& cfg);

// Summed intensity over active sources at the robot's microphone.
double sample_microphone(const RobotTruth& robot,
                         const std::vector<SoundSource>& sources,
                         const SoundModelParams& model);

// Energy bookkeeping for one robot over dt. Drain interpolates between idle
// and moving power by the mean |duty| of both motors; charging adds energy
// at the assigned station's rate (power.charge_rate_w when none is known).
// Battery is clamped to [0, capacity].
RobotTruth battery_step(const RobotTruth& robot, bool moving, bool charging,
                        double dt_s, const PowerParams& power);

RobotTruth battery_step(const RobotTruth& robot, bool moving, bool charging,
                        double dt_s, const PowerParams& power,
                        double charge_rate_w);

}  // namespace swarmsim
