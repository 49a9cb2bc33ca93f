#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "swarmsim/bus.hpp"
#include "swarmsim/kinematics.hpp"
#include "swarmsim/vec2.hpp"

namespace swarmsim {

struct GoToGoalParams {
  double k_linear = 1.0;    // m/s per meter of distance
  double k_angular = 2.0;   // rad/s per radian of heading error
  double goal_tol_m = 0.02;
};

// Go-to-goal twist: rotate toward the goal, drive forward only when roughly
// facing it (the cos gate), stop inside the goal tolerance.
Twist position_controller(const Pose2D& current, const Vec2& goal,
                          const GoToGoalParams& params,
                          const RobotParams& robot);

// Maps a planar velocity request to a unicycle twist using the same heading
// logic: omega chases the velocity direction, forward speed is gated by the
// heading error. Returns zero twist for negligible requests.
Twist planar_velocity_to_twist(const Vec2& velocity_mps, double heading_rad,
                               double k_angular, const RobotParams& robot);

struct SwarmConfig {
  double gain_epsilon = 0.15;   // per-tick consensus gain
  double comm_radius_m = 0.0;   // 0 = complete graph
  double safety_radius_m = 0.12;
  double repulsion_gain = 1.0;
  double footprint_radius_m = 0.05;
  double plan_margin_m = 0.012;  // planning floor = 2*footprint + margin
  double convergence_tol_m = 0.01;
  int max_steps = 4000;

  // Discrete consensus with x <- x + eps*xdot is contracting on the complete
  // graph only when eps*(N-1) < 1; safety radius must clear two footprints.
  void validate(size_t robot_count) const;
};

struct FormationSpec {
  std::vector<Vec2> offsets;
  std::map<std::string, size_t> assignment;  // robot id -> offset index

  // Shifts offsets to a zero centroid; the formation is defined only up to a
  // common translation, so the canonical form fixes the redundancy.
  void canonicalize();
  // Offsets aligned with the given roster order.
  std::vector<Vec2> offsets_for(const std::vector<std::string>& robot_ids) const;
};

// Consensus velocity toward the neighbors' center of mass:
// xdot_i = sum_{j in N_i} (x_j - x_i). Raw, before gain and avoidance.
std::vector<Vec2> rendezvous_step(const std::vector<Vec2>& positions,
                                  const SwarmConfig& cfg);

// Every robot heads for the neighbor with the loudest microphone (self
// included, so the loudest robot parks). Ties break to the lowest index;
// an all-zero intensity vector falls back to plain rendezvous.
std::vector<Vec2> sound_rendezvous_step(const std::vector<Vec2>& positions,
                                        const std::vector<double>& intensities,
                                        const SwarmConfig& cfg);

// Consensus on chi_i = x_i - xi_i: converges to the offset shape up to a
// common translation. Exactly rendezvous_step applied to chi.
std::vector<Vec2> formation_step(const std::vector<Vec2>& positions,
                                 const std::vector<Vec2>& offsets,
                                 const SwarmConfig& cfg);

// Velocities here are per-tick displacements. Pairs closer than the safety
// radius get a linear repulsion, then a symmetric braking pass caps closing
// speed so the planned next-step separation never dips below the planning
// floor. Pairs beyond the safety radius pass through untouched.
std::vector<Vec2> collision_avoidance(const std::vector<Vec2>& positions,
                                      const std::vector<Vec2>& velocities,
                                      const SwarmConfig& cfg);

enum class Algorithm { kRendezvous, kSoundRendezvous, kFormation };

enum class PositionSource { kCamera, kOdometry };

struct ExecutorParams {
  Algorithm algorithm = Algorithm::kRendezvous;
  SwarmConfig swarm;
  FormationSpec formation;  // consulted only for Algorithm::kFormation
  PositionSource source = PositionSource::kCamera;
  double control_period_s = 0.05;
  double staleness_bound_s = 0.5;
  double stop_speed_mps = 0.001;
  double max_planar_speed_mps = 0.15;
  double k_angular = 4.0;
  // Exponential smoothing applied per camera frame before the swarm laws
  // see the positions; 1 = raw reports. Noisy-camera scenarios lower this
  // so measurement spikes cannot steer a pair through the braking floor.
  double position_filter_alpha = 1.0;
  RobotParams robot;
};

struct ExecutorStatus {
  uint64_t ticks = 0;
  uint64_t stale_ticks = 0;
  bool converged = false;
  int64_t convergence_tick = -1;
  double last_max_pairwise_m = 0.0;
  double last_max_planar_speed_mps = 0.0;
};

// The collective controller: one periodic task driving every robot through
// the bus. Each tick reads global positions (camera topic by default,
// aggregated odometry otherwise), runs the selected swarm law, applies gain,
// avoidance and the planar speed cap, converts to twists and publishes one
// cmd_vel per robot. Robots can join or leave between ticks.
class SwarmExecutor {
 public:
  SwarmExecutor(Bus& bus, const ExecutorParams& params,
                const std::vector<std::string>& robot_ids);

  void add_robot(const std::string& robot_id);
  void remove_robot(const std::string& robot_id);
  const std::vector<std::string>& roster() const { return robot_ids_; }

  // Runs one control tick at sim time now_s. Publishes nothing and counts a
  // stale tick when any robot's position is missing or older than the
  // staleness bound. After convergence (or max_steps) publishes stop twists.
  void tick(double now_s);

  const ExecutorStatus& status() const { return status_; }

 private:
  struct Snapshot {
    std::vector<Vec2> positions;
    std::vector<double> headings;
    std::vector<double> intensities;
  };
  std::optional<Snapshot> read_snapshot(double now_s);
  void publish_stop();

  Bus* bus_;
  ExecutorParams params_;
  std::vector<std::string> robot_ids_;  // kept sorted
  std::map<std::string, Publisher> cmd_publishers_;
  Subscription camera_sub_;
  std::map<std::string, Pose2D> filtered_;
  double last_frame_stamp_s_ = -1e300;
  ExecutorStatus status_;
};

}  // namespace swarmsim
