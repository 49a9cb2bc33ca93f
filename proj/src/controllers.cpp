#include "swarmsim/controllers.hpp"

#include <algorithm>
#include <cmath>

#include "swarmsim/angles.hpp"
#include "swarmsim/errors.hpp"

namespace swarmsim {

Twist position_controller(const Pose2D& current, const Vec2& goal,
                          const GoToGoalParams& params,
                          const RobotParams& robot) {
  if (!std::isfinite(goal.x) || !std::isfinite(goal.y))
    throw InvalidInput("goal must be finite");
  const double dx = goal.x - current.x_m;
  const double dy = goal.y - current.y_m;
  const double dist = std::hypot(dx, dy);
  if (dist < params.goal_tol_m) return {0.0, 0.0};
  const double alpha =
      normalize_angle(std::atan2(dy, dx) - current.theta_rad);
  const double v = params.k_linear * dist * std::max(0.0, std::cos(alpha));
  const double w = params.k_angular * alpha;
  return saturate_twist({v, w}, robot);
}

Twist planar_velocity_to_twist(const Vec2& velocity_mps, double heading_rad,
                               double k_angular, const RobotParams& robot) {
  const double speed = velocity_mps.norm();
  if (speed < 1e-9) return {0.0, 0.0};
  const double alpha =
      normalize_angle(std::atan2(velocity_mps.y, velocity_mps.x) - heading_rad);
  const double v = speed * std::max(0.0, std::cos(alpha));
  const double w = k_angular * alpha;
  return saturate_twist({v, w}, robot);
}

void SwarmConfig::validate(size_t robot_count) const {
  if (gain_epsilon <= 0.0)
    throw InvalidInput("swarm.gain_epsilon must be > 0");
  if (comm_radius_m == 0.0 && robot_count >= 2 &&
      gain_epsilon * static_cast<double>(robot_count - 1) >= 1.0)
    throw InvalidInput(
        "swarm.gain_epsilon * (N-1) must be < 1 on the complete graph");
  if (comm_radius_m < 0.0)
    throw InvalidInput("swarm.comm_radius_m must be >= 0");
  if (safety_radius_m < 2.0 * footprint_radius_m)
    throw InvalidInput(
        "swarm.safety_radius_m must be >= two footprint radii");
  if (repulsion_gain < 0.0)
    throw InvalidInput("swarm.repulsion_gain must be >= 0");
  if (plan_margin_m < 0.0)
    throw InvalidInput("swarm.plan_margin_m must be >= 0");
  if (convergence_tol_m <= 0.0)
    throw InvalidInput("swarm.convergence_tol_m must be > 0");
  if (max_steps <= 0) throw InvalidInput("swarm.max_steps must be > 0");
}

void FormationSpec::canonicalize() {
  if (offsets.empty()) return;
  Vec2 centroid;
  for (const Vec2& o : offsets) centroid += o;
  centroid = centroid / static_cast<double>(offsets.size());
  for (Vec2& o : offsets) o -= centroid;
}

std::vector<Vec2> FormationSpec::offsets_for(
    const std::vector<std::string>& robot_ids) const {
  std::vector<Vec2> out;
  out.reserve(robot_ids.size());
  for (const auto& id : robot_ids) {
    auto it = assignment.find(id);
    if (it == assignment.end())
      throw ShapeError("no formation offset assigned to robot '" + id + "'");
    if (it->second >= offsets.size())
      throw ShapeError("offset index for robot '" + id +
                       "' is out of range");
    out.push_back(offsets[it->second]);
  }
  return out;
}

namespace {

bool is_neighbor(const std::vector<Vec2>& x, size_t i, size_t j,
                 const SwarmConfig& cfg) {
  if (i == j) return false;
  if (cfg.comm_radius_m == 0.0) return true;
  return distance(x[i], x[j]) <= cfg.comm_radius_m;
}

}  // namespace

std::vector<Vec2> rendezvous_step(const std::vector<Vec2>& positions,
                                  const SwarmConfig& cfg) {
  const size_t n = positions.size();
  if (n < 2) throw DegenerateSwarm("rendezvous needs at least 2 robots");
  std::vector<Vec2> xdot(n);
  for (size_t i = 0; i < n; ++i)
    for (size_t j = 0; j < n; ++j)
      if (is_neighbor(positions, i, j, cfg))
        xdot[i] += positions[j] - positions[i];
  return xdot;
}

std::vector<Vec2> sound_rendezvous_step(const std::vector<Vec2>& positions,
                                        const std::vector<double>& intensities,
                                        const SwarmConfig& cfg) {
  const size_t n = positions.size();
  if (n < 2) throw DegenerateSwarm("sound rendezvous needs at least 2 robots");
  if (intensities.size() != n)
    throw ShapeError("intensity count does not match robot count");
  bool all_zero = true;
  for (double s : intensities) {
    if (!std::isfinite(s)) throw InvalidInput("intensities must be finite");
    if (s != 0.0) all_zero = false;
  }
  if (all_zero) return rendezvous_step(positions, cfg);

  std::vector<Vec2> xdot(n);
  for (size_t i = 0; i < n; ++i) {
    // Loudest robot among the neighbors and itself; the robot holding the
    // maximum therefore stays put.
    size_t best = i;
    for (size_t j = 0; j < n; ++j) {
      if (!is_neighbor(positions, i, j, cfg)) continue;
      if (intensities[j] > intensities[best] ||
          (intensities[j] == intensities[best] && j < best))
        best = j;
    }
    xdot[i] = positions[best] - positions[i];
  }
  return xdot;
}

std::vector<Vec2> formation_step(const std::vector<Vec2>& positions,
                                 const std::vector<Vec2>& offsets,
                                 const SwarmConfig& cfg) {
  if (offsets.size() != positions.size())
    throw ShapeError("formation offset count does not match robot count");
  std::vector<Vec2> chi(positions.size());
  for (size_t i = 0; i < positions.size(); ++i)
    chi[i] = positions[i] - offsets[i];
  return rendezvous_step(chi, cfg);
}

std::vector<Vec2> collision_avoidance(const std::vector<Vec2>& positions,
                                      const std::vector<Vec2>& velocities,
                                      const SwarmConfig& cfg) {
  const size_t n = positions.size();
  if (velocities.size() != n)
    throw ShapeError("velocity count does not match position count");
  std::vector<Vec2> u = velocities;

  // Repulsion only ever pushes pairs apart.
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      const Vec2 sep = positions[j] - positions[i];
      const double d = sep.norm();
      if (d >= cfg.safety_radius_m) continue;
      const double push = cfg.repulsion_gain * (cfg.safety_radius_m - d);
      // Coincident robots get split along x by index so nothing divides by 0.
      const Vec2 dir = d > 1e-12 ? sep / d : Vec2{1.0, 0.0};
      u[i] -= push * dir;
      u[j] += push * dir;
    }
  }

  // Braking: cap the closing component of each in-radius pair so the planned
  // next-step separation stays at or above the planning floor. Capping one
  // pair can increase another pair's closing speed, so iterate to rest.
  const double floor_m = 2.0 * cfg.footprint_radius_m + cfg.plan_margin_m;
  for (int pass = 0; pass < 8; ++pass) {
    bool adjusted = false;
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = i + 1; j < n; ++j) {
        const Vec2 sep = positions[j] - positions[i];
        const double d = sep.norm();
        if (d >= cfg.safety_radius_m || d <= 1e-12) continue;
        const Vec2 dir = sep / d;
        const double closing = (u[i] - u[j]).dot(dir);
        const double allowed = std::max(0.0, d - floor_m);
        const double excess = closing - allowed;
        if (excess > 1e-15) {
          u[i] -= 0.5 * excess * dir;
          u[j] += 0.5 * excess * dir;
          adjusted = true;
        }
      }
    }
    if (!adjusted) break;
  }
  return u;
}

SwarmExecutor::SwarmExecutor(Bus& bus, const ExecutorParams& params,
                             const std::vector<std::string>& robot_ids)
    : bus_(&bus), params_(params), robot_ids_(robot_ids) {
  std::sort(robot_ids_.begin(), robot_ids_.end());
  robot_ids_.erase(std::unique(robot_ids_.begin(), robot_ids_.end()),
                   robot_ids_.end());
  if (robot_ids_.size() < 2)
    throw DegenerateSwarm("the executor needs at least 2 robots");
  params_.robot.validate();
  params_.swarm.validate(robot_ids_.size());
  if (params_.control_period_s <= 0.0)
    throw InvalidInput("executor.control_period_s must be > 0");
  if (params_.staleness_bound_s <= 0.0)
    throw InvalidInput("executor.staleness_bound_s must be > 0");
  if (params_.position_filter_alpha <= 0.0 ||
      params_.position_filter_alpha > 1.0)
    throw InvalidInput("executor.position_filter_alpha must be in (0, 1]");
  if (params_.algorithm == Algorithm::kFormation)
    params_.formation.offsets_for(robot_ids_);  // assignment must be total
  for (const auto& id : robot_ids_)
    cmd_publishers_[id] = bus_->advertise(topic_cmd_vel(id));
  if (params_.source == PositionSource::kCamera)
    camera_sub_ = bus_->subscribe(topic_global_position(), 16);
}

void SwarmExecutor::add_robot(const std::string& robot_id) {
  if (std::count(robot_ids_.begin(), robot_ids_.end(), robot_id))
    throw InvalidRequest("robot '" + robot_id + "' is already in the swarm");
  std::vector<std::string> next = robot_ids_;
  next.push_back(robot_id);
  std::sort(next.begin(), next.end());
  params_.swarm.validate(next.size());
  if (params_.algorithm == Algorithm::kFormation)
    params_.formation.offsets_for(next);
  cmd_publishers_[robot_id] = bus_->advertise(topic_cmd_vel(robot_id));
  robot_ids_ = std::move(next);
}

void SwarmExecutor::remove_robot(const std::string& robot_id) {
  auto it = std::find(robot_ids_.begin(), robot_ids_.end(), robot_id);
  if (it == robot_ids_.end())
    throw InvalidRequest("robot '" + robot_id + "' is not in the swarm");
  if (robot_ids_.size() <= 2)
    throw DegenerateSwarm("removing '" + robot_id +
                          "' would leave fewer than 2 robots");
  robot_ids_.erase(it);
  cmd_publishers_.erase(robot_id);
  bus_->unadvertise(topic_cmd_vel(robot_id));
}

std::optional<SwarmExecutor::Snapshot> SwarmExecutor::read_snapshot(
    double now_s) {
  Snapshot snap;
  const size_t n = robot_ids_.size();
  snap.positions.resize(n);
  snap.headings.resize(n);

  if (params_.source == PositionSource::kCamera) {
    // Fold every frame since the last tick into the per-robot filter, in
    // arrival order, so the smoothing is independent of the tick cadence.
    const double a = params_.position_filter_alpha;
    for (const auto& env : camera_sub_.drain()) {
      for (const auto& r : env.payload) {
        const std::string id = r.at("robot_id").get<std::string>();
        const Pose2D raw{r.at("x_m").get<double>(), r.at("y_m").get<double>(),
                         r.at("theta_rad").get<double>()};
        auto it = filtered_.find(id);
        if (it == filtered_.end() || a >= 1.0) {
          filtered_[id] = raw;
        } else {
          Pose2D& f = it->second;
          f.x_m += a * (raw.x_m - f.x_m);
          f.y_m += a * (raw.y_m - f.y_m);
          f.theta_rad = normalize_angle(
              f.theta_rad + a * normalize_angle(raw.theta_rad - f.theta_rad));
        }
      }
      last_frame_stamp_s_ = env.stamp_s;
    }
    if (now_s - last_frame_stamp_s_ > params_.staleness_bound_s)
      return std::nullopt;
    for (size_t i = 0; i < n; ++i) {
      auto it = filtered_.find(robot_ids_[i]);
      if (it == filtered_.end()) return std::nullopt;
      snap.positions[i] = {it->second.x_m, it->second.y_m};
      snap.headings[i] = it->second.theta_rad;
    }
  } else {
    std::vector<TopicPath> topics;
    for (const auto& id : robot_ids_) topics.push_back(topic_odom(id));
    const AggregateMatrix m =
        bus_->aggregate_matrix(topics, {"x_m", "y_m", "theta_rad"});
    for (size_t i = 0; i < n; ++i) {
      if (!m.columns[i]) return std::nullopt;
      auto latest = bus_->latest_on(topic_odom(m.namespaces[i]));
      if (!latest || now_s - latest->stamp_s > params_.staleness_bound_s)
        return std::nullopt;
      snap.positions[i] = {(*m.columns[i])[0], (*m.columns[i])[1]};
      snap.headings[i] = (*m.columns[i])[2];
    }
  }

  if (params_.algorithm == Algorithm::kSoundRendezvous) {
    std::vector<TopicPath> topics;
    for (const auto& id : robot_ids_) topics.push_back(topic_sound(id));
    const AggregateMatrix m =
        bus_->aggregate_matrix(topics, {"intensity_w_m2"});
    snap.intensities.resize(n);
    for (size_t i = 0; i < n; ++i) {
      if (!m.columns[i]) return std::nullopt;
      snap.intensities[i] = (*m.columns[i])[0];
    }
  }
  return snap;
}

void SwarmExecutor::publish_stop() {
  for (auto& [id, pub] : cmd_publishers_)
    pub.publish({{"v_mps", 0.0}, {"w_radps", 0.0}});
}

void SwarmExecutor::tick(double now_s) {
  if (status_.converged ||
      status_.ticks >= static_cast<uint64_t>(params_.swarm.max_steps)) {
    publish_stop();
    return;
  }
  ++status_.ticks;

  auto snap = read_snapshot(now_s);
  if (!snap) {
    ++status_.stale_ticks;
    return;
  }
  const size_t n = robot_ids_.size();

  std::vector<Vec2> xdot;
  switch (params_.algorithm) {
    case Algorithm::kRendezvous:
      xdot = rendezvous_step(snap->positions, params_.swarm);
      break;
    case Algorithm::kSoundRendezvous:
      xdot = sound_rendezvous_step(snap->positions, snap->intensities,
                                   params_.swarm);
      break;
    case Algorithm::kFormation:
      xdot = formation_step(snap->positions,
                            params_.formation.offsets_for(robot_ids_),
                            params_.swarm);
      break;
  }

  // Per-tick displacement plan: gain, speed cap, then avoidance.
  const double cap_m = params_.max_planar_speed_mps * params_.control_period_s;
  std::vector<Vec2> u(n);
  for (size_t i = 0; i < n; ++i) {
    u[i] = params_.swarm.gain_epsilon * xdot[i];
    const double mag = u[i].norm();
    if (mag > cap_m) u[i] = u[i] * (cap_m / mag);
  }
  u = collision_avoidance(snap->positions, u, params_.swarm);

  double max_speed = 0.0;
  for (const Vec2& ui : u)
    max_speed = std::max(max_speed, ui.norm() / params_.control_period_s);
  double max_pair = 0.0;
  for (size_t i = 0; i < n; ++i)
    for (size_t j = i + 1; j < n; ++j)
      max_pair = std::max(max_pair,
                          distance(snap->positions[i], snap->positions[j]));
  status_.last_max_planar_speed_mps = max_speed;
  status_.last_max_pairwise_m = max_pair;

  const bool gathered =
      params_.algorithm != Algorithm::kFormation &&
      max_pair <= 2.0 * params_.swarm.safety_radius_m +
                      params_.swarm.convergence_tol_m;
  if (max_speed < params_.stop_speed_mps || gathered) {
    status_.converged = true;
    status_.convergence_tick = static_cast<int64_t>(status_.ticks);
    publish_stop();
    return;
  }

  for (size_t i = 0; i < n; ++i) {
    const Twist t = planar_velocity_to_twist(
        u[i] / params_.control_period_s, snap->headings[i],
        params_.k_angular, params_.robot);
    cmd_publishers_[robot_ids_[i]].publish(
        {{"v_mps", t.linear_mps}, {"w_radps", t.angular_radps}});
  }
}

}  // namespace swarmsim
