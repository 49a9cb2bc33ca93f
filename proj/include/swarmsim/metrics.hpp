#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "swarmsim/trajectory.hpp"

namespace swarmsim {

// All summary statistics are recomputed from the logged trajectory, never
// from live run state, so summary.json always matches what a later
// `metrics` invocation on the same file produces.
//
// Error conventions:
//  - odometry vs truth and odometry vs camera are origin-aligned: both
//    tracks are shifted to start at the same point before differencing.
//  - camera vs truth is absolute (the camera is the drift-free reference).
//  - convergence step: first step from which every robot's chord speed
//    stays below 2 mm/s through the end of the run; -1 if never.
//  - formation error: mean |neighbor distance - target side| over the final
//    tenth of the run, neighbors being consecutive offsets in header order.
nlohmann::json compute_metrics(const TrajectoryFile& traj);

// Delimiter-separated plot tables. kind selects the schema:
//   paths             t,robot_id,source,x,y        (source: truth|odom|camera)
//   pairwise_distance t,robot_a,robot_b,distance_m
//   odom_error        t,robot_id,error_m
//   camera_vs_truth   t,robot_id,radial_error_m
std::string plot_data(const TrajectoryFile& traj, const std::string& kind);

}  // namespace swarmsim
