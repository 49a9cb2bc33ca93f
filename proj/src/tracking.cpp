#include "swarmsim/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "swarmsim/angles.hpp"
#include "swarmsim/errors.hpp"

namespace swarmsim {

Vec2 FrameCalibration::to_global(const Vec2& raw) const {
  const Vec2 d = raw - raw_origin;
  return {m00 * d.x + m01 * d.y, m10 * d.x + m11 * d.y};
}

Vec2 FrameCalibration::to_raw(const Vec2& global) const {
  const double det = m00 * m11 - m01 * m10;
  const double ix = (m11 * global.x - m01 * global.y) / det;
  const double iy = (-m10 * global.x + m00 * global.y) / det;
  return raw_origin + Vec2{ix, iy};
}

double FrameCalibration::heading_to_global(double raw_theta) const {
  const double cx = std::cos(raw_theta);
  const double cy = std::sin(raw_theta);
  return std::atan2(m10 * cx + m11 * cy, m00 * cx + m01 * cy);
}

Pose2D FrameCalibration::to_global(const Pose2D& raw) const {
  const Vec2 p = to_global(Vec2{raw.x_m, raw.y_m});
  return {p.x, p.y, heading_to_global(raw.theta_rad)};
}

FrameCalibration calibrate_frame(const Vec2& origin, const Vec2& x_point,
                                 const Vec2& y_point, double x_span_m,
                                 double y_span_m) {
  if (x_span_m < 0.0 || y_span_m < 0.0)
    throw InvalidInput("frame spans must be >= 0");
  const Vec2 u = x_point - origin;
  const Vec2 v = y_point - origin;
  const double det = u.x * v.y - u.y * v.x;
  const double scale = std::max(u.norm(), v.norm());
  if (scale <= 0.0 || std::abs(det) < 1e-12 * scale * scale)
    throw DegenerateFrame("axis markers are collinear or coincident");

  // Images of the marker offsets: u -> (sx, 0), v -> (0, sy).
  const double sx = x_span_m > 0.0 ? x_span_m : u.norm();
  const double sy = y_span_m > 0.0 ? y_span_m : v.norm();

  // M = diag(sx, sy) * inv([u v]).
  FrameCalibration cal;
  cal.raw_origin = origin;
  cal.m00 = sx * v.y / det;
  cal.m01 = sx * -v.x / det;
  cal.m10 = sy * -u.y / det;
  cal.m11 = sy * u.x / det;
  return cal;
}

std::vector<GlobalPoseReport> observe_poses(const WorldState& world,
                                            const TrackingParams& params,
                                            double stamp_s, Rng& rng) {
  if (params.position_sigma_m < 0.0 || params.heading_sigma_rad < 0.0)
    throw InvalidInput("tracking noise sigmas must be >= 0");
  // Table bounds in the output frame, from the images of the four corners,
  // widened by the 3 sigma report margin.
  const Vec2 corners[4] = {{0.0, 0.0},
                           {world.table_width_m, 0.0},
                           {0.0, world.table_height_m},
                           {world.table_width_m, world.table_height_m}};
  double lo_x = std::numeric_limits<double>::infinity(), hi_x = -lo_x;
  double lo_y = lo_x, hi_y = hi_x;
  for (const Vec2& c : corners) {
    const Vec2 g = params.frame.to_global(c);
    lo_x = std::min(lo_x, g.x);
    hi_x = std::max(hi_x, g.x);
    lo_y = std::min(lo_y, g.y);
    hi_y = std::max(hi_y, g.y);
  }
  const double margin = 3.0 * params.position_sigma_m;

  std::vector<GlobalPoseReport> out;
  out.reserve(world.robots.size());
  for (const auto& r : world.robots) {
    if (params.drop_probability > 0.0 &&
        rng.uniform01() < params.drop_probability)
      continue;
    Pose2D p = params.frame.to_global(r.pose);
    if (params.position_sigma_m > 0.0) {
      p.x_m += rng.gaussian(0.0, params.position_sigma_m);
      p.y_m += rng.gaussian(0.0, params.position_sigma_m);
    }
    if (params.heading_sigma_rad > 0.0)
      p.theta_rad = normalize_angle(
          p.theta_rad + rng.gaussian(0.0, params.heading_sigma_rad));
    p.x_m = std::clamp(p.x_m, lo_x - margin, hi_x + margin);
    p.y_m = std::clamp(p.y_m, lo_y - margin, hi_y + margin);
    out.push_back({r.id, p, stamp_s});
  }
  return out;
}

std::optional<ChargingStation> assign_charging_station(
    std::vector<ChargingStation>& stations, const std::string& robot_id,
    const Pose2D& robot_pose, const std::set<std::string>& known_robots) {
  if (!known_robots.count(robot_id))
    throw InvalidRequest("charging request from unknown robot '" + robot_id +
                         "'");
  for (const auto& st : stations)
    if (st.occupied_by && *st.occupied_by == robot_id) return st;

  const ChargingStation* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& st : stations) {
    if (st.occupied_by) continue;
    const double d = std::hypot(st.x_m - robot_pose.x_m,
                                st.y_m - robot_pose.y_m);
    if (d < best_d || (d == best_d && best && st.id < best->id)) {
      best = &st;
      best_d = d;
    }
  }
  if (!best) return std::nullopt;
  auto* chosen = const_cast<ChargingStation*>(best);
  chosen->occupied_by = robot_id;
  return *chosen;
}

bool release_charging_station(std::vector<ChargingStation>& stations,
                              const std::string& robot_id) {
  bool released = false;
  for (auto& st : stations) {
    if (st.occupied_by && *st.occupied_by == robot_id) {
      st.occupied_by.reset();
      released = true;
    }
  }
  return released;
}

TrackingServer::TrackingServer(const TrackingParams& params, uint64_t seed)
    : params_(params), rng_(seed) {
  if (params.rate_hz <= 0.0) throw InvalidInput("camera rate must be > 0");
}

std::vector<CameraFrame> TrackingServer::poll(const WorldState& world) {
  std::vector<CameraFrame> frames;
  const double period = 1.0 / params_.rate_hz;
  while (next_due_s_ <= world.sim_time_s + 1e-12) {
    frames.push_back(
        {next_due_s_, observe_poses(world, params_, next_due_s_, rng_)});
    next_due_s_ += period;
  }
  return frames;
}

}  // namespace swarmsim
