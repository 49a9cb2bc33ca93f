#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "swarmsim/errors.hpp"
#include "swarmsim/metrics.hpp"
#include "swarmsim/runner.hpp"
#include "swarmsim/scenario.hpp"
#include "swarmsim/trajectory.hpp"

namespace {

using nlohmann::json;

std::string meters(const json& v) {
  if (v.is_null()) return "n/a";
  return swarmsim::format_number(v.get<double>()) + " m";
}

int run_command(const std::string& scenario_path, const std::string& out_dir,
                std::optional<uint64_t> seed,
                const std::vector<std::string>& overrides) {
  const swarmsim::Scenario scenario =
      swarmsim::load_scenario_file(scenario_path, overrides, seed);
  const swarmsim::RunResult result = swarmsim::run_scenario(scenario);
  swarmsim::write_run_artifacts(scenario, result, out_dir);
  std::cout << swarmsim::run_summary_json(result, scenario.seed).dump(2)
            << "\n";
  return 0;
}

int metrics_command(const std::string& trajectory_path, bool as_json) {
  const swarmsim::TrajectoryFile traj =
      swarmsim::read_trajectory(trajectory_path);
  const json m = swarmsim::compute_metrics(traj);
  if (as_json) {
    std::cout << m.dump(2) << "\n";
    return 0;
  }
  std::cout << "steps: " << m.at("steps").get<size_t>() << " (dt "
            << swarmsim::format_number(m.at("dt_s").get<double>()) << " s, "
            << m.at("robots").get<size_t>() << " robots, "
            << traj.header.algorithm << ")\n";
  std::cout << "odometry vs truth: mean " << meters(m.at("odom_truth_mean_m"))
            << ", max " << meters(m.at("odom_truth_max_m")) << "\n";
  std::cout << "camera vs truth: mean radial "
            << meters(m.at("camera_truth_mean_radial_m")) << "\n";
  std::cout << "max body speed: "
            << (m.at("max_body_speed_mps").is_null()
                    ? std::string("n/a")
                    : swarmsim::format_number(
                          m.at("max_body_speed_mps").get<double>()) +
                          " m/s")
            << "\n";
  if (!m.at("pairwise").is_null()) {
    const json& p = m.at("pairwise");
    std::cout << "pairwise distance: min " << meters(p.at("min_m")) << ", max "
              << meters(p.at("max_m")) << ", final ["
              << meters(p.at("final_min_m")) << ", "
              << meters(p.at("final_max_m")) << "]\n";
  }
  std::cout << "convergence step: " << m.at("convergence_step").get<int64_t>()
            << "\n";
  if (!m.at("formation").is_null()) {
    std::cout << "formation error: mean "
              << meters(m.at("formation").at("error_mean_m")) << "\n";
  }
  return 0;
}

int plotdata_command(const std::string& trajectory_path,
                     const std::string& kind, const std::string& out_path) {
  const swarmsim::TrajectoryFile traj =
      swarmsim::read_trajectory(trajectory_path);
  const std::string table = swarmsim::plot_data(traj, kind);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw swarmsim::InvalidInput("cannot write '" + out_path + "'");
  out << table;
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic tabletop swarm simulator"};
  app.require_subcommand(1);

  std::string scenario_path, out_dir;
  std::vector<std::string> overrides;
  std::optional<uint64_t> seed;
  auto* run =
      app.add_subcommand("run", "Execute a scenario and write run artifacts");
  run->add_option("scenario", scenario_path, "Scenario config file")
      ->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed, "Override the scenario seed");
  run->add_option("--set", overrides,
                  "Override a config key, e.g. --set swarm.gain_epsilon=0.1");

  std::string metrics_traj;
  bool as_json = false;
  auto* metrics = app.add_subcommand(
      "metrics", "Recompute the summary metrics from a trajectory log");
  metrics->add_option("trajectory", metrics_traj, "trajectory.jsonl path")
      ->required();
  metrics->add_flag("--json", as_json, "Emit the full structured report");

  std::string plot_traj, plot_kind, plot_out;
  auto* plot = app.add_subcommand(
      "plotdata", "Export a plot-ready table from a trajectory log");
  plot->add_option("trajectory", plot_traj, "trajectory.jsonl path")
      ->required();
  plot->add_option("--kind", plot_kind,
                   "paths | pairwise_distance | odom_error | camera_vs_truth")
      ->required();
  plot->add_option("--out", plot_out, "Output table path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return run_command(scenario_path, out_dir, seed, overrides);
    if (metrics->parsed()) return metrics_command(metrics_traj, as_json);
    return plotdata_command(plot_traj, plot_kind, plot_out);
  } catch (const swarmsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const swarmsim::RuntimeViolation& e) {
    std::cerr << "runtime violation: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
