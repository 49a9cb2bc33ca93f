#pragma once

#include <optional>
#include <string>
#include <vector>

#include "swarmsim/kinematics.hpp"
#include "swarmsim/vec2.hpp"

namespace swarmsim {

// Log format: one header line, then one record line per robot per step,
// steps contiguous from 0, robots in header order within a step. Lines are
// JSON with a fixed key order and numbers printed with 9 significant
// digits, so identical runs produce byte-identical files.

struct TrajectoryHeader {
  int version = 1;
  double dt_s = 0.0;
  double wheel_radius_m = 0.016;  // lets readers recover body speed
  std::vector<std::string> robot_ids;
  std::string algorithm;
  std::optional<std::vector<Vec2>> formation_offsets;
};

struct TrajectoryRecord {
  int64_t step = 0;
  double t_s = 0.0;
  std::string robot_id;
  Pose2D truth;
  Pose2D odom;
  std::optional<Pose2D> camera;  // latest camera report, absent before one
  Twist cmd;
  WheelSpeeds wheels;       // true wheel speeds
  double left_ticks = 0.0;  // measured encoder reading
  double right_ticks = 0.0;
  double battery_wh = 0.0;
  double sound = 0.0;
};

struct TrajectoryFile {
  TrajectoryHeader header;
  std::vector<TrajectoryRecord> records;
};

// Fixed 9-significant-digit formatting shared by every artifact writer.
std::string format_number(double v);

std::string format_header(const TrajectoryHeader& header);
std::string format_record(const TrajectoryRecord& record);

void write_trajectory(const std::string& path, const TrajectoryHeader& header,
                      const std::vector<TrajectoryRecord>& records);

// Strict reader: unknown or missing fields, malformed lines, step gaps and
// robot/step mismatches are all rejected with the offending line number.
TrajectoryFile parse_trajectory(const std::string& text);
TrajectoryFile read_trajectory(const std::string& path);

}  // namespace swarmsim
