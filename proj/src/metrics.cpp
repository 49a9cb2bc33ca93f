#include "swarmsim/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "swarmsim/errors.hpp"

namespace swarmsim {

using nlohmann::json;

namespace {

struct ErrorStats {
  double sum = 0.0, sum_sq = 0.0, max = 0.0;
  size_t n = 0;
  void add(double e) {
    sum += e;
    sum_sq += e * e;
    max = std::max(max, e);
    ++n;
  }
  json to_json() const {
    if (n == 0) return nullptr;
    const double mean = sum / static_cast<double>(n);
    const double var =
        std::max(0.0, sum_sq / static_cast<double>(n) - mean * mean);
    return {{"mean_m", mean}, {"std_m", std::sqrt(var)}, {"max_m", max}};
  }
};

double planar_dist(const Pose2D& a, const Pose2D& b) {
  return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

}  // namespace

json compute_metrics(const TrajectoryFile& traj) {
  const size_t n = traj.header.robot_ids.size();
  const size_t steps = n == 0 ? 0 : traj.records.size() / n;
  const double dt = traj.header.dt_s;

  json out;
  out["steps"] = steps;
  out["dt_s"] = dt;
  out["robots"] = n;
  out["per_robot"] = json::object();
  out["odom_truth_mean_m"] = nullptr;
  out["odom_truth_max_m"] = nullptr;
  out["camera_truth_mean_radial_m"] = nullptr;
  out["max_body_speed_mps"] = nullptr;
  out["max_planar_speed_mps"] = nullptr;
  out["pairwise"] = nullptr;
  out["convergence_step"] = -1;
  out["formation"] = nullptr;
  if (steps == 0) return out;

  auto rec = [&](size_t s, size_t i) -> const TrajectoryRecord& {
    return traj.records[s * n + i];
  };

  // Body speed v = r*(wl+wr)/2 from the logged wheel speeds; planar speed
  // from truth chords.
  double max_body = 0.0, max_planar = 0.0;
  const double wheel_radius = traj.header.wheel_radius_m;
  for (size_t s = 0; s < steps; ++s) {
    for (size_t i = 0; i < n; ++i) {
      const auto& r = rec(s, i);
      max_body = std::max(
          max_body, std::abs(wheel_radius *
                             (r.wheels.left_radps + r.wheels.right_radps) /
                             2.0));
      if (s > 0)
        max_planar = std::max(
            max_planar, planar_dist(rec(s - 1, i).truth, r.truth) / dt);
    }
  }
  out["max_body_speed_mps"] = max_body;
  out["max_planar_speed_mps"] = steps > 1 ? json(max_planar) : json(nullptr);

  // Per-robot error tracks.
  double odom_truth_mean_acc = 0.0, odom_truth_max = 0.0;
  double cam_truth_sum = 0.0;
  size_t cam_truth_n = 0;
  for (size_t i = 0; i < n; ++i) {
    ErrorStats odom_truth, odom_cam;
    double cam_sum = 0.0;
    size_t cam_n = 0;
    const Pose2D odom0 = rec(0, i).odom;
    const Pose2D truth0 = rec(0, i).truth;
    std::optional<Pose2D> cam0, odom_at_cam0;
    for (size_t s = 0; s < steps; ++s) {
      const auto& r = rec(s, i);
      const double ex = (r.odom.x_m - odom0.x_m) - (r.truth.x_m - truth0.x_m);
      const double ey = (r.odom.y_m - odom0.y_m) - (r.truth.y_m - truth0.y_m);
      odom_truth.add(std::hypot(ex, ey));
      if (r.camera) {
        if (!cam0) {
          cam0 = *r.camera;
          odom_at_cam0 = r.odom;
        }
        const double cx =
            (r.odom.x_m - odom_at_cam0->x_m) - (r.camera->x_m - cam0->x_m);
        const double cy =
            (r.odom.y_m - odom_at_cam0->y_m) - (r.camera->y_m - cam0->y_m);
        odom_cam.add(std::hypot(cx, cy));
        cam_sum += planar_dist(*r.camera, r.truth);
        ++cam_n;
      }
    }
    json per;
    per["odom_truth"] = odom_truth.to_json();
    per["odom_camera"] = odom_cam.to_json();
    per["camera_truth_mean_radial_m"] =
        cam_n ? json(cam_sum / static_cast<double>(cam_n)) : json(nullptr);
    out["per_robot"][traj.header.robot_ids[i]] = per;
    odom_truth_mean_acc += odom_truth.sum / static_cast<double>(odom_truth.n);
    odom_truth_max = std::max(odom_truth_max, odom_truth.max);
    cam_truth_sum += cam_sum;
    cam_truth_n += cam_n;
  }
  out["odom_truth_mean_m"] = odom_truth_mean_acc / static_cast<double>(n);
  out["odom_truth_max_m"] = odom_truth_max;
  out["camera_truth_mean_radial_m"] =
      cam_truth_n ? json(cam_truth_sum / static_cast<double>(cam_truth_n))
                  : json(nullptr);

  // Pairwise distances over the whole run (truth positions).
  if (n >= 2) {
    double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
    double final_min = dmin, final_max = 0.0;
    for (size_t s = 0; s < steps; ++s) {
      for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
          const double d = planar_dist(rec(s, i).truth, rec(s, j).truth);
          dmin = std::min(dmin, d);
          dmax = std::max(dmax, d);
          if (s + 1 == steps) {
            final_min = std::min(final_min, d);
            final_max = std::max(final_max, d);
          }
        }
      }
    }
    out["pairwise"] = {{"min_m", dmin},
                       {"max_m", dmax},
                       {"final_min_m", final_min},
                       {"final_max_m", final_max}};
  }

  // Convergence: scan from the end for the first step after which every
  // robot's chord speed stays below the threshold.
  constexpr double kSettledSpeed = 0.002;
  int64_t conv = -1;
  if (steps > 1) {
    size_t s = steps;
    while (s > 1) {
      bool settled = true;
      for (size_t i = 0; i < n && settled; ++i)
        settled = planar_dist(rec(s - 2, i).truth, rec(s - 1, i).truth) / dt <
                  kSettledSpeed;
      if (!settled) break;
      --s;
    }
    if (s < steps) conv = static_cast<int64_t>(s);
  }
  out["convergence_step"] = conv;

  // Formation: neighbor distances against the offset polygon's sides,
  // averaged over the final tenth of the run.
  if (traj.header.formation_offsets && n >= 2) {
    const auto& offs = *traj.header.formation_offsets;
    if (offs.size() == n) {
      std::vector<double> target(n);
      for (size_t i = 0; i < n; ++i)
        target[i] = distance(offs[i], offs[(i + 1) % n]);
      const size_t window = std::max<size_t>(1, steps / 10);
      double err_sum = 0.0;
      size_t err_n = 0;
      for (size_t s = steps - window; s < steps; ++s) {
        for (size_t i = 0; i < n; ++i) {
          const double d =
              planar_dist(rec(s, i).truth, rec(s, (i + 1) % n).truth);
          err_sum += std::abs(d - target[i]);
          ++err_n;
        }
      }
      std::vector<double> final_sides(n);
      for (size_t i = 0; i < n; ++i)
        final_sides[i] = planar_dist(rec(steps - 1, i).truth,
                                     rec(steps - 1, (i + 1) % n).truth);
      out["formation"] = {
          {"target_sides_m", target},
          {"error_mean_m", err_sum / static_cast<double>(err_n)},
          {"final_sides_m", final_sides}};
    }
  }
  return out;
}

std::string plot_data(const TrajectoryFile& traj, const std::string& kind) {
  const size_t n = traj.header.robot_ids.size();
  const size_t steps = n == 0 ? 0 : traj.records.size() / n;
  auto rec = [&](size_t s, size_t i) -> const TrajectoryRecord& {
    return traj.records[s * n + i];
  };
  std::string out;

  if (kind == "paths") {
    out = "t,robot_id,source,x,y\n";
    for (size_t s = 0; s < steps; ++s) {
      for (size_t i = 0; i < n; ++i) {
        const auto& r = rec(s, i);
        const std::string prefix =
            format_number(r.t_s) + "," + r.robot_id + ",";
        out += prefix + "truth," + format_number(r.truth.x_m) + "," +
               format_number(r.truth.y_m) + "\n";
        out += prefix + "odom," + format_number(r.odom.x_m) + "," +
               format_number(r.odom.y_m) + "\n";
        if (r.camera)
          out += prefix + "camera," + format_number(r.camera->x_m) + "," +
                 format_number(r.camera->y_m) + "\n";
      }
    }
    return out;
  }
  if (kind == "pairwise_distance") {
    out = "t,robot_a,robot_b,distance_m\n";
    for (size_t s = 0; s < steps; ++s)
      for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
          out += format_number(rec(s, i).t_s) + "," + rec(s, i).robot_id +
                 "," + rec(s, j).robot_id + "," +
                 format_number(planar_dist(rec(s, i).truth,
                                           rec(s, j).truth)) +
                 "\n";
    return out;
  }
  if (kind == "odom_error") {
    out = "t,robot_id,error_m\n";
    for (size_t i = 0; i < n; ++i) {
      const Pose2D odom0 = steps ? rec(0, i).odom : Pose2D{};
      const Pose2D truth0 = steps ? rec(0, i).truth : Pose2D{};
      for (size_t s = 0; s < steps; ++s) {
        const auto& r = rec(s, i);
        const double ex =
            (r.odom.x_m - odom0.x_m) - (r.truth.x_m - truth0.x_m);
        const double ey =
            (r.odom.y_m - odom0.y_m) - (r.truth.y_m - truth0.y_m);
        out += format_number(r.t_s) + "," + r.robot_id + "," +
               format_number(std::hypot(ex, ey)) + "\n";
      }
    }
    return out;
  }
  if (kind == "camera_vs_truth") {
    out = "t,robot_id,radial_error_m\n";
    for (size_t s = 0; s < steps; ++s)
      for (size_t i = 0; i < n; ++i) {
        const auto& r = rec(s, i);
        if (r.camera)
          out += format_number(r.t_s) + "," + r.robot_id + "," +
                 format_number(planar_dist(*r.camera, r.truth)) + "\n";
      }
    return out;
  }
  throw InvalidInput("unknown plot kind '" + kind +
                     "' (expected paths, pairwise_distance, odom_error or "
                     "camera_vs_truth)");
}

}  // namespace swarmsim
