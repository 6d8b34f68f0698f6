#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "planforge/backend.hpp"

namespace planforge {

struct OptimizeConfig {
  int rounds = 10;             // N
  int branching = 3;           // K candidates per round
  int capacity = 5;            // P, queue size
  int questions_per_eval = 5;  // T
  std::uint64_t seed = 0;

  bool operator==(const OptimizeConfig&) const = default;
};

/// Throws InvalidValue unless N >= 0, K >= 1, P >= 1 and T >= 1.
void validate(const OptimizeConfig& config);

/// Everything that determines a run's outcome; captured into the run record.
struct RunConfig {
  OptimizeConfig optimize;
  std::string topic = "algebraic equations";
  AgentConfig evaluator = AgentConfig::defaults_for(AgentRole::Evaluator);
  AgentConfig optimizer = AgentConfig::defaults_for(AgentRole::Optimizer);
  AgentConfig analyst = AgentConfig::defaults_for(AgentRole::Analyst);
  AgentConfig judge = AgentConfig::defaults_for(AgentRole::Judge);
  double weak_threshold = 3.0;

  bool operator==(const RunConfig&) const = default;
};

void validate(const RunConfig& config);

nlohmann::json to_json(const RunConfig& config);

/// Overlays the fields present in `j` onto `base`. Accepts the run-record
/// layout as well as the flat config-file layout ("rounds", "seed", ...).
RunConfig run_config_from_json(const nlohmann::json& j, RunConfig base = {});

}  // namespace planforge
