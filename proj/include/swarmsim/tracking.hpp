#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "swarmsim/kinematics.hpp"
#include "swarmsim/rng.hpp"
#include "swarmsim/vec2.hpp"
#include "swarmsim/world.hpp"

namespace swarmsim {

// Affine map from raw sensor coordinates to the global table frame, derived
// from three axis markers. The origin marker lands on (0, 0); the x and y
// markers land on the positive axes. When a span is zero the marker's raw
// distance from the origin is kept, so the map is rigid for perpendicular
// unit markers; a nonzero span rescales that axis (moving the markers apart
// resizes the field instead of stretching the reports).
struct FrameCalibration {
  // Row-major 2x2 linear part followed by the raw-frame origin.
  double m00 = 1.0, m01 = 0.0, m10 = 0.0, m11 = 1.0;
  Vec2 raw_origin;

  Vec2 to_global(const Vec2& raw) const;
  Vec2 to_raw(const Vec2& global) const;
  // Heading transforms through the linear part's action on the direction
  // vector, so shear and per-axis scale are handled, not just rotations.
  double heading_to_global(double raw_theta) const;
  Pose2D to_global(const Pose2D& raw) const;
};

FrameCalibration calibrate_frame(const Vec2& origin, const Vec2& x_point,
                                 const Vec2& y_point, double x_span_m = 0.0,
                                 double y_span_m = 0.0);

struct GlobalPoseReport {
  std::string robot_id;
  Pose2D pose;
  double stamp_s = 0.0;
};

struct CameraFrame {
  double stamp_s = 0.0;
  std::vector<GlobalPoseReport> reports;
};

struct TrackingParams {
  double rate_hz = 30.0;
  double position_sigma_m = 0.006383;  // mean radial error sigma*sqrt(pi/2) = 0.008
  double heading_sigma_rad = 0.01;
  double drop_probability = 0.0;
  FrameCalibration frame;
};

// One camera observation pass over the world. Reports are truth mapped
// through the calibration, plus isotropic Gaussian position noise and
// Gaussian heading noise, clamped to the mapped table bounds widened by a
// 3 sigma margin.
std::vector<GlobalPoseReport> observe_poses(const WorldState& world,
                                            const TrackingParams& params,
                                            double stamp_s, Rng& rng);

// Nearest unoccupied station to the robot, ties broken by lowest station id.
// A robot that already holds a station gets that same station back. Unknown
// robot ids are rejected. Returns empty when every station is taken.
std::optional<ChargingStation> assign_charging_station(
    std::vector<ChargingStation>& stations, const std::string& robot_id,
    const Pose2D& robot_pose, const std::set<std::string>& known_robots);

// Frees the robot's station if it holds one; returns whether one was held.
bool release_charging_station(std::vector<ChargingStation>& stations,
                              const std::string& robot_id);

// Periodic camera task. poll() emits one frame per elapsed camera period
// (stamped at the exact due time), so frame count per simulated second is
// exact regardless of the polling step.
class TrackingServer {
 public:
  TrackingServer(const TrackingParams& params, uint64_t seed);

  std::vector<CameraFrame> poll(const WorldState& world);

  const TrackingParams& params() const { return params_; }

 private:
  TrackingParams params_;
  Rng rng_;
  double next_due_s_ = 0.0;
};

}  // namespace swarmsim
