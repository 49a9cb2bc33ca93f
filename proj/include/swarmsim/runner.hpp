#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "swarmsim/controllers.hpp"
#include "swarmsim/scenario.hpp"
#include "swarmsim/trajectory.hpp"
#include "swarmsim/world.hpp"

namespace swarmsim {

struct ChargingCounters {
  uint64_t grants = 0;
  uint64_t denials = 0;
  uint64_t releases = 0;
};

struct RunResult {
  TrajectoryHeader header;
  std::vector<TrajectoryRecord> records;
  WorldState final_world;
  bool executor_present = false;
  ExecutorStatus executor;
  ChargingCounters charging;
  size_t steps_run = 0;
};

// Executes the scenario's deterministic step loop entirely in memory.
// Each step: bus flush, camera frames, executor tick, per-robot control
// (PID duties plus the charging routine), world physics, sensing and topic
// publication, logging, then violation checks. Throws RuntimeViolation
// (with the step number) on NaN poses or footprint overlap.
RunResult run_scenario(const Scenario& scenario);

nlohmann::json run_summary_json(const RunResult& result, uint64_t seed);

// Writes trajectory.jsonl, summary.json and config.resolved.json into
// out_dir (created if missing). summary.json's metrics block is computed by
// re-reading the trajectory file just written, so it matches a later
// `metrics` invocation bit for bit.
void write_run_artifacts(const Scenario& scenario, const RunResult& result,
                         const std::string& out_dir);

}  // namespace swarmsim
