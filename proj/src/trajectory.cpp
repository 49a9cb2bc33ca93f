#include "swarmsim/trajectory.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "swarmsim/errors.hpp"

namespace swarmsim {

using nlohmann::json;

std::string format_number(double v) {
  if (!std::isfinite(v))
    throw InvalidInput("trajectory numbers must be finite");
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

namespace {

std::string quote(const std::string& s) { return json(s).dump(); }

void append_pose(std::string& out, const Pose2D& p) {
  out += '[';
  out += format_number(p.x_m);
  out += ',';
  out += format_number(p.y_m);
  out += ',';
  out += format_number(p.theta_rad);
  out += ']';
}

Pose2D pose_from(const json& a, const char* field, size_t line_no) {
  if (!a.is_array() || a.size() != 3)
    throw InvalidInput("line " + std::to_string(line_no) + ": field '" +
                       field + "' must be a 3-element array");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

void check_fields(const json& o, const std::set<std::string>& required,
                  size_t line_no) {
  for (auto it = o.begin(); it != o.end(); ++it)
    if (!required.count(it.key()))
      throw InvalidInput("line " + std::to_string(line_no) +
                         ": unknown field '" + it.key() + "'");
  for (const auto& f : required)
    if (!o.contains(f))
      throw InvalidInput("line " + std::to_string(line_no) +
                         ": missing field '" + f + "'");
}

}  // namespace

std::string format_header(const TrajectoryHeader& h) {
  std::string out = "{\"type\":\"header\",\"version\":";
  out += std::to_string(h.version);
  out += ",\"dt_s\":";
  out += format_number(h.dt_s);
  out += ",\"wheel_radius_m\":";
  out += format_number(h.wheel_radius_m);
  out += ",\"robot_ids\":[";
  for (size_t i = 0; i < h.robot_ids.size(); ++i) {
    if (i) out += ',';
    out += quote(h.robot_ids[i]);
  }
  out += "],\"algorithm\":";
  out += quote(h.algorithm);
  if (h.formation_offsets) {
    out += ",\"formation_offsets\":[";
    for (size_t i = 0; i < h.formation_offsets->size(); ++i) {
      if (i) out += ',';
      out += '[';
      out += format_number((*h.formation_offsets)[i].x);
      out += ',';
      out += format_number((*h.formation_offsets)[i].y);
      out += ']';
    }
    out += ']';
  }
  out += '}';
  return out;
}

std::string format_record(const TrajectoryRecord& r) {
  std::string out = "{\"step\":";
  out += std::to_string(r.step);
  out += ",\"t_s\":";
  out += format_number(r.t_s);
  out += ",\"robot_id\":";
  out += quote(r.robot_id);
  out += ",\"truth\":";
  append_pose(out, r.truth);
  out += ",\"odom\":";
  append_pose(out, r.odom);
  out += ",\"camera\":";
  if (r.camera) {
    append_pose(out, *r.camera);
  } else {
    out += "null";
  }
  out += ",\"cmd\":[";
  out += format_number(r.cmd.linear_mps);
  out += ',';
  out += format_number(r.cmd.angular_radps);
  out += "],\"wheels\":[";
  out += format_number(r.wheels.left_radps);
  out += ',';
  out += format_number(r.wheels.right_radps);
  out += "],\"ticks\":[";
  out += format_number(r.left_ticks);
  out += ',';
  out += format_number(r.right_ticks);
  out += "],\"battery_wh\":";
  out += format_number(r.battery_wh);
  out += ",\"sound\":";
  out += format_number(r.sound);
  out += '}';
  return out;
}

void write_trajectory(const std::string& path, const TrajectoryHeader& header,
                      const std::vector<TrajectoryRecord>& records) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot open '" + path + "' for writing");
  f << format_header(header) << '\n';
  for (const auto& r : records) f << format_record(r) << '\n';
  f.flush();
  if (!f) throw InvalidInput("write to '" + path + "' failed");
}

TrajectoryFile parse_trajectory(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  TrajectoryFile out;
  bool have_header = false;

  static const std::set<std::string> header_fields = {
      "type",      "version",   "dt_s", "wheel_radius_m",
      "robot_ids", "algorithm", "formation_offsets"};
  static const std::set<std::string> header_required = {
      "type", "version", "dt_s", "wheel_radius_m", "robot_ids", "algorithm"};
  static const std::set<std::string> record_fields = {
      "step", "t_s", "robot_id", "truth", "odom",       "camera",
      "cmd",  "wheels", "ticks", "battery_wh", "sound"};

  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json o;
    try {
      o = json::parse(line);
    } catch (const json::parse_error& e) {
      throw InvalidInput("line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      if (!have_header) {
        for (auto it = o.begin(); it != o.end(); ++it)
          if (!header_fields.count(it.key()))
            throw InvalidInput("line " + std::to_string(line_no) +
                               ": unknown field '" + it.key() + "'");
        for (const auto& f : header_required)
          if (!o.contains(f))
            throw InvalidInput("line " + std::to_string(line_no) +
                               ": missing field '" + f + "'");
        if (o.at("type").get<std::string>() != "header")
          throw InvalidInput("line 1: first line must be the header");
        out.header.version = o.at("version").get<int>();
        if (out.header.version != 1)
          throw InvalidInput("line 1: unsupported trajectory version " +
                             std::to_string(out.header.version));
        out.header.dt_s = o.at("dt_s").get<double>();
        out.header.wheel_radius_m = o.at("wheel_radius_m").get<double>();
        out.header.robot_ids =
            o.at("robot_ids").get<std::vector<std::string>>();
        out.header.algorithm = o.at("algorithm").get<std::string>();
        if (o.contains("formation_offsets")) {
          std::vector<Vec2> offs;
          for (const auto& p : o.at("formation_offsets"))
            offs.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
          out.header.formation_offsets = std::move(offs);
        }
        have_header = true;
        continue;
      }

      check_fields(o, record_fields, line_no);
      TrajectoryRecord r;
      r.step = o.at("step").get<int64_t>();
      r.t_s = o.at("t_s").get<double>();
      r.robot_id = o.at("robot_id").get<std::string>();
      r.truth = pose_from(o.at("truth"), "truth", line_no);
      r.odom = pose_from(o.at("odom"), "odom", line_no);
      if (!o.at("camera").is_null())
        r.camera = pose_from(o.at("camera"), "camera", line_no);
      r.cmd = {o.at("cmd").at(0).get<double>(),
               o.at("cmd").at(1).get<double>()};
      r.wheels = {o.at("wheels").at(0).get<double>(),
                  o.at("wheels").at(1).get<double>()};
      r.left_ticks = o.at("ticks").at(0).get<double>();
      r.right_ticks = o.at("ticks").at(1).get<double>();
      r.battery_wh = o.at("battery_wh").get<double>();
      r.sound = o.at("sound").get<double>();
      out.records.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw InvalidInput("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw InvalidInput("line 1: trajectory header missing");

  // Shape: steps contiguous from 0, each with exactly the header's robots
  // in header order.
  const size_t n = out.header.robot_ids.size();
  if (n == 0 && !out.records.empty())
    throw InvalidInput("records present but the header lists no robots");
  if (!out.records.empty()) {
    if (out.records.size() % n != 0)
      throw InvalidInput("record count is not a multiple of the robot count");
    const size_t steps = out.records.size() / n;
    for (size_t s = 0; s < steps; ++s) {
      for (size_t i = 0; i < n; ++i) {
        const auto& r = out.records[s * n + i];
        const size_t ln = 2 + s * n + i;
        if (r.step != static_cast<int64_t>(s))
          throw InvalidInput("line " + std::to_string(ln) +
                             ": expected step " + std::to_string(s));
        if (r.robot_id != out.header.robot_ids[i])
          throw InvalidInput("line " + std::to_string(ln) +
                             ": expected robot '" + out.header.robot_ids[i] +
                             "'");
      }
    }
  }
  return out;
}

TrajectoryFile read_trajectory(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_trajectory(ss.str());
}

}  // namespace swarmsim
