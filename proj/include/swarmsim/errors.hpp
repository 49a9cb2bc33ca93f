#pragma once

#include <stdexcept>
#include <string>

namespace swarmsim {

// Base for all library errors so callers can catch one type.
struct SimError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidInput : SimError {
  using SimError::SimError;
};

// Encoder readings with a non-positive time interval.
struct InvalidInterval : SimError {
  using SimError::SimError;
};

// Degenerate arc radius in the firmware-style pose update.
struct UnsupportedBranch : SimError {
  using SimError::SimError;
};

// Collinear or coincident calibration markers.
struct DegenerateFrame : SimError {
  using SimError::SimError;
};

// Second publisher claiming an already-owned topic.
struct OwnershipError : SimError {
  using SimError::SimError;
};

struct TimeoutError : SimError {
  using SimError::SimError;
};

// A service responder raised; carries the remote message.
struct RemoteError : SimError {
  using SimError::SimError;
};

// Payload shape mismatch in matrix aggregation.
struct ShapeError : SimError {
  using SimError::SimError;
};

// Service request that cannot be honored (e.g. unknown robot id).
struct InvalidRequest : SimError {
  using SimError::SimError;
};

// Swarm algorithms need at least two robots.
struct DegenerateSwarm : SimError {
  using SimError::SimError;
};

// Control loop fed position data older than the staleness bound.
struct StaleData : SimError {
  using SimError::SimError;
};

// Scenario file / CLI configuration problems. Exit code 2.
struct ConfigError : SimError {
  using SimError::SimError;
};

// NaN poses, disc overlap, or other mid-run violations. Exit code 3.
struct RuntimeViolation : SimError {
  using SimError::SimError;
};

}  // namespace swarmsim
